#pragma once

// Experiment orchestration: build the initial Legendrian, flow it until it
// converges, blows up or times out, and record Diagnostics at every step.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lmcf/analysis.hpp"
#include "lmcf/flow.hpp"
#include "lmcf/immersion.hpp"

namespace lmcf {

struct ExperimentConfig {
  std::string model = "hypcyl3";
  Parametrization init{"hyperbolic_geodesic", 0.05, "cos", 1, false};
  std::vector<int> resolution{128};
  double cfl = 0.2;
  // Fixed step when set. Otherwise cfl * h_min^2 at t = 0, reset to
  // cfl * h_min^2 whenever the curve contracts to within 90% of the stability limit.
  std::optional<double> dt;
  double t_max = 6.0;
  double convergence_H = 1e-4;
  double blowup_factor = 1e4;
  int spectral_every = 10;
  double r0 = 1.0;
  bool reeb_term = true;
  bool project = true;
  bool stop_on_convergence = true;
  ThresholdSet thresholds;

  void validate() const {
    if (!(t_max > 0.0)) throw SchemaError("t_max must be positive");
    if (!(cfl > 0.0)) throw SchemaError("cfl must be positive");
    if (!(convergence_H > 0.0)) throw SchemaError("convergence threshold must be positive");
    if (!(blowup_factor > 0.0)) throw SchemaError("blowup factor must be positive");
    if (spectral_every < 1) throw SchemaError("spectral_every must be >= 1");
    if (dt && !(*dt > 0.0)) throw SchemaError("dt must be positive");
    thresholds.validate();
  }
};

struct RunResult {
  std::vector<Diagnostics> trajectory;
  std::optional<FlowState> final_state;
  std::string verdict;  // converged | blowup | timeout
  double dt = 0.0;      // initial step
  double min_dt = 0.0;  // smallest step taken
  int dt_reductions = 0;
  int drift_corrections = 0;
  double max_projection_correction = 0.0;
};

using StepObserver = std::function<void(const FlowState&)>;

inline RunResult run(const ExperimentConfig& cfg, const StepObserver& observer = {}) {
  cfg.validate();
  const SasakianModel model = SasakianModel::from_id(cfg.model);
  const DiscreteLegendrian L0 = build_immersion(model, cfg.init, cfg.resolution);
  FlowState s = initial_state(L0);
  FlowOptions opt;
  opt.cfl = cfg.cfl;
  opt.reeb_term = cfg.reeb_term;
  opt.project = cfg.project;

  RunResult res;
  const double hm = h_min(L0);
  res.dt = cfg.dt ? *cfg.dt : cfg.cfl * hm * hm;
  res.min_dt = res.dt;
  const double A0 = s.sff.max_A_sq;
  const double blowup_at = cfg.blowup_factor * std::max(A0, 1.0);

  double lam1 = lambda1(s.L);
  auto record = [&](const FlowState& st) {
    if (st.step % cfg.spectral_every == 0) lam1 = lambda1(st.L);
    const Diagnostics* prev = res.trajectory.empty() ? nullptr : &res.trajectory.back();
    const double kap = noncollapsing(st.L, cfg.r0);
    res.trajectory.push_back(diagnostics(st, prev, lam1, kap, cfg.r0));
    if (observer) observer(st);
  };
  record(s);
  res.verdict = "timeout";
  if (cfg.stop_on_convergence && s.sff.max_H() < cfg.convergence_H) {
    res.verdict = "converged";
  } else {
    double dt = res.dt;
    while (s.t < cfg.t_max - 1e-9 * dt) {
      if (!cfg.dt) {
        const double h = h_min(s.L);
        if (dt > 0.9 * kStableCfl * h * h) {
          dt = cfg.cfl * h * h;
          res.min_dt = std::min(res.min_dt, dt);
          ++res.dt_reductions;
        }
      }
      s = step(s, dt, opt);
      res.drift_corrections += s.last.drift_corrected;
      res.max_projection_correction = std::max(res.max_projection_correction, s.last.projection_correction);
      const bool conv = s.sff.max_H() < cfg.convergence_H;
      const bool blow = s.sff.max_A_sq > blowup_at;
      s.last.converged = conv;
      s.last.blowup = blow;
      record(s);
      if (blow) {
        res.verdict = "blowup";
        break;
      }
      if (conv && cfg.stop_on_convergence) {
        res.verdict = "converged";
        break;
      }
    }
    if (res.verdict == "timeout" && s.sff.max_H() < cfg.convergence_H) res.verdict = "converged";
  }
  res.final_state = std::move(s);
  return res;
}

/// Constants for bound_audit derived from the model of a run.
inline AuditContext audit_context(const ExperimentConfig& cfg) {
  const SasakianModel m = SasakianModel::from_id(cfg.model);
  const auto K = curvature_bounds(m, 1, 1);
  return AuditContext{m.eta_einstein_constant(), m.n(), K[0], K[1], cfg.r0};
}

}  // namespace lmcf
