// Acceptance harness: one PASS/FAIL line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lmcf/ambient.hpp"
#include "lmcf/analysis.hpp"
#include "lmcf/io.hpp"
#include "lmcf/run.hpp"
#include "lmcf/verify.hpp"
#include "lmcf/verify_evolution.hpp"

using namespace lmcf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Line {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2e", v);
  return b;
}

const std::vector<std::string> kModels{"sphere3", "sphere5", "heisenberg3", "heisenberg5", "hypcyl3"};

ExperimentConfig golden() {
  ExperimentConfig cfg;  // hypcyl3, hyperbolic_geodesic, s = 0.05 cos, N = 128, t_max = 6
  return cfg;
}

RunResult& golden_run() {
  static RunResult r = run(golden());
  return r;
}

Line c1() {
  Line l;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& id : kModels) {
    const auto m = SasakianModel::from_id(id);
    const auto rep = ambient_identity_residuals(m, sample_points(m, 100));
    worst = std::max(worst, rep.worst());
    l.require(rep.worst() < 1e-8, id + " worst " + sci(rep.worst()));
  }
  const double s = seconds_since(t0);
  l.require(s < 10.0, "runtime " + std::to_string(s) + " s");
  if (l.pass) l.detail = "worst residual " + sci(worst) + " over 5 models x 100 points, " + std::to_string(s) + " s";
  return l;
}

Line c2() {
  Line l;
  const std::map<std::string, double> expect{
      {"sphere3", 4.0}, {"sphere5", 6.0}, {"heisenberg3", 0.0}, {"heisenberg5", 0.0}, {"hypcyl3", -1.0}};
  double worst = 0.0;
  for (const auto& [id, k2] : expect) {
    const auto m = SasakianModel::from_id(id);
    const auto rep = ambient_identity_residuals(m, sample_points(m, 20, 4242));
    for (double f : rep.fitted_kplus2) worst = std::max(worst, std::abs(f - k2));
    l.require(std::abs(m.eta_einstein_constant() - k2) == 0.0, id + " stored constant");
  }
  l.require(worst < 1e-6, "fit deviation " + sci(worst));
  if (l.pass) l.detail = "max |fitted K+2 - expected| = " + sci(worst);
  return l;
}

Line c3() {
  Line l;
  const double a = second_fundamental(build_immersion(SasakianModel::from_id("sphere3"), {"great_circle", 0.0}, {256})).max_H();
  const double b =
      second_fundamental(build_immersion(SasakianModel::from_id("hypcyl3"), {"hyperbolic_geodesic", 0.0}, {256})).max_H();
  const double c =
      second_fundamental(build_immersion(SasakianModel::from_id("sphere5"), {"clifford_torus", 0.0}, {32, 32})).max_H();
  l.require(a < 1e-8, "great circle " + sci(a));
  l.require(b < 1e-8, "hyperbolic " + sci(b));
  l.require(c < 1e-6, "Clifford " + sci(c));
  if (l.pass) l.detail = "max|H| " + sci(a) + " / " + sci(b) + " / " + sci(c);
  return l;
}

Line c4() {
  Line l;
  const auto t0 = Clock::now();
  struct Fam {
    std::string model;
    Parametrization p;
    std::vector<int> N;
  };
  const std::vector<Fam> fams{{"sphere3", {"great_circle", 0.1}, {128}},
                              {"hypcyl3", {"hyperbolic_geodesic", 0.05}, {256}},
                              {"sphere5", {"clifford_torus", 0.05}, {32, 32}},
                              {"heisenberg3", {"heisenberg_lemniscate", 0.0}, {256}}};
  int rows = 0;
  for (const auto& f : fams) {
    for (const auto& r : identity_refinement(SasakianModel::from_id(f.model), f.p, f.N)) {
      if (r.informational) continue;
      ++rows;
      l.require(r.pass, f.p.family + "/" + r.id + " coarse " + sci(r.coarse) + " fine " + sci(r.fine));
    }
  }
  const double s = seconds_since(t0);
  l.require(s < 120.0, "runtime " + std::to_string(s) + " s");
  if (l.pass) l.detail = std::to_string(rows) + " gating rows on 4 families pass at N and 2N, " + std::to_string(s) + " s";
  return l;
}

Line c5() {
  Line l;
  ExperimentConfig cfg = golden();
  cfg.resolution = {32};
  const auto L0 = build_immersion(SasakianModel::from_id(cfg.model), cfg.init, cfg.resolution);
  const double hm = h_min(L0);
  std::string orders;
  for (const auto& r : evolution_order_study(cfg, 0.3, 0.25 * hm * hm, {"V", "angle", "2", "H", "21"})) {
    if (r.informational) continue;
    l.require(r.measured_order >= 3.5 && r.measured_order <= 4.5, r.id + " order " + std::to_string(r.measured_order));
    char b[48];
    std::snprintf(b, sizeof b, "%s:%.2f ", r.id.c_str(), r.measured_order);
    orders += b;
  }
  ExperimentConfig st = golden();
  st.resolution = {32};
  st.init.amplitude = 0.0;
  st.t_max = 0.05;
  st.spectral_every = 1000000;
  double worst = 0.0;
  for (const auto& r : evolution_residuals(record_trajectory(st))) worst = std::max(worst, r.max_residual);
  l.require(worst < 1e-12, "stationary residual " + sci(worst));
  if (l.pass) l.detail = "orders " + orders + "(N=32); stationary " + sci(worst);
  return l;
}

Line c6() {
  Line l;
  const auto t0 = Clock::now();
  const RunResult& r = golden_run();
  const double s = seconds_since(t0);
  const auto& fin = *r.final_state;
  l.require(r.verdict == "converged", "verdict " + r.verdict);
  l.require(fin.sff.max_H() < 1e-4 && fin.t <= 6.0, "final max|H| " + sci(fin.sff.max_H()));
  std::vector<double> t, I;
  for (const auto& d : r.trajectory) {
    t.push_back(d.t);
    I.push_back(d.l2_H_sq);
  }
  const auto fit = decay_fit(t, I, 1.0, 3.0);
  l.require(fit.rate >= -4.5 && fit.rate <= -3.5, "rate " + std::to_string(fit.rate));
  const auto L0 = build_immersion(SasakianModel::from_id("hypcyl3"), {"hyperbolic_geodesic", 0.0}, {128});
  const double dist = sup_distance(fin.L, L0);
  l.require(dist < 0.05, "sup distance " + sci(dist));
  l.require(s < 300.0, "runtime " + std::to_string(s) + " s");
  if (l.pass) {
    char b[200];
    std::snprintf(b, sizeof b, "converged t=%.3f, rate %.4f, sup-dist %.2e, %.1f s", fin.t, fit.rate, dist, s);
    l.detail = b;
  }
  return l;
}

Line c7() {
  Line l;
  const auto items = bound_audit(golden_run().trajectory, audit_context(golden()));
  for (const auto& a : items) l.require(a.pass, a.name + " margin " + sci(a.worst_margin));
  // each auditor against its manufactured violation
  std::vector<Diagnostics> base;
  for (int k = 0; k < 20; ++k) {
    Diagnostics d;
    d.t = 0.01 * k;
    d.dt = 0.01;
    d.l2_H_sq = std::exp(-4.0 * d.t);
    d.max_H = d.max_grad_H = 0.1 * std::exp(-2.0 * d.t);
    d.max_A_sq = 0.01;
    d.lambda1 = 3.0;
    d.kappa = 2.0;
    base.push_back(d);
  }
  const AuditContext ctx{1.0, 1, 0.0, 0.0, 1.0};
  auto fails = [&](const std::string& name, const std::function<void(std::vector<Diagnostics>&)>& spoil) {
    auto tr = base;
    spoil(tr);
    for (const auto& a : bound_audit(tr, ctx))
      if (a.name == name) return !a.pass;
    return false;
  };
  for (const auto& a : bound_audit(base, ctx)) l.require(a.pass, "control " + a.name);
  l.require(fails("H_energy_growth", [](auto& tr) { for (auto& d : tr) d.l2_H_sq = std::exp(4.0 * d.t); }),
            "growth violation not caught");
  l.require(fails("H_energy_decay", [](auto& tr) { for (auto& d : tr) d.l2_H_sq = std::exp(-1.0 * d.t); }),
            "decay violation not caught");
  l.require(fails("eigenvalue_drift_bound", [](auto& tr) { tr.back().lambda1 = 0.5; }), "eigenvalue violation not caught");
  l.require(fails("noncollapsing_lower_bound", [](auto& tr) { tr[10].kappa = 1.0; }), "noncollapsing violation not caught");
  l.require(fails("H_sup_estimate", [](auto& tr) {
              tr[5].max_H = 2.0;
              tr[5].l2_H_sq = 1e-9;
            }),
            "sup-estimate violation not caught");
  l.require(fails("curvature_doubling", [](auto& tr) { tr[3].max_A_sq = 0.09; }), "doubling violation not caught");
  if (l.pass) l.detail = "6 audits pass on the golden run; 6 manufactured violations caught";
  return l;
}

Line c8() {
  Line l;
  const auto g = stability_report(build_immersion(SasakianModel::from_id("sphere3"), {"great_circle", 0.0}, {128}));
  l.require(std::abs(g.lambda1 - 1.0) < 1e-4 && g.kplus2 == 4.0 && g.verdict == Verdict::unstable,
            "great circle (" + std::to_string(g.lambda1) + ", " + std::to_string(g.kplus2) + ", " + to_string(g.verdict) + ")");
  const auto L = build_immersion(SasakianModel::from_id("hypcyl3"), {"hyperbolic_geodesic", 0.0}, {128});
  const auto h = stability_report(L, potential_on_grid(L.grid(), "cos", 1));
  l.require(std::abs(h.lambda1 - 1.0) < 1e-4 && h.kplus2 == -1.0 && h.verdict == Verdict::strictly_stable,
            "hyperbolic (" + std::to_string(h.lambda1) + ", " + std::to_string(h.kplus2) + ", " + to_string(h.verdict) + ")");
  const double formula = *h.second_variation_formula, fd = *h.second_variation_fd;
  l.require(std::abs(formula - 2.0 * std::numbers::pi) < 1e-6, "formula " + std::to_string(formula));
  l.require(std::abs(fd - formula) / formula < 0.01, "fd " + std::to_string(fd));
  if (l.pass) {
    char b[160];
    std::snprintf(b, sizeof b, "S3 (%.6f, 4, unstable); H2xR (%.6f, -1, strictly_stable), Q = %.6f, FD %.6f",
                  g.lambda1, h.lambda1, formula, fd);
    l.detail = b;
  }
  return l;
}

Line c9() {
  Line l;
  std::vector<std::pair<std::string, std::vector<Diagnostics>>> runs;
  runs.emplace_back("golden", golden_run().trajectory);
  ExperimentConfig sph;
  sph.model = "sphere3";
  sph.init = {"great_circle", 0.1};
  sph.resolution = {64};
  sph.t_max = 0.5;
  runs.emplace_back("sphere3", run(sph).trajectory);
  ExperimentConfig lem;
  lem.model = "heisenberg3";
  lem.init = {"heisenberg_lemniscate", 0.0};
  lem.resolution = {128};
  lem.t_max = 0.02;
  runs.emplace_back("lemniscate", run(lem).trajectory);
  for (const auto& [name, tr] : runs) {
    const auto v = structural_invariants(tr);
    l.require(v.volume_monotone, name + " volume increase " + sci(v.worst_volume_increase));
    l.require(v.legendrian, name + " Legendrian residual " + sci(v.max_leg_residual));
    l.require(v.cycles_constant, name + " cycle drift " + sci(v.worst_cycle_drift));
  }
  Parametrization hc{"heisenberg_circle", 0.0};
  hc.central_quotient = true;
  const auto L = build_immersion(SasakianModel::from_id("heisenberg3"), hc, {64});
  bool rejected = false;
  try {
    solve_angle(L, second_fundamental(L).H);
  } catch (const NonExactMeanCurvature&) {
    rejected = true;
  }
  l.require(rejected, "Heisenberg circle accepted");
  if (l.pass) l.detail = "3 trajectories clean; Heisenberg circle rejected with NonExactMeanCurvature";
  return l;
}

Line c10() {
  Line l;
  const std::string a = trajectory_csv(golden_run().trajectory);
  const std::string b = trajectory_csv(run(golden()).trajectory);
  l.require(!a.empty() && a == b, "CSV differs");
  if (l.pass) l.detail = std::to_string(a.size()) + " bytes identical across two golden runs";
  return l;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Line()>>> criteria{
      {"1 ambient identity suite", c1},      {"2 eta-Einstein constants", c2},
      {"3 minimality of known minimal Legendrians", c3},
      {"4 submanifold identity suite", c4},  {"5 evolution-equation consistency", c5},
      {"6 scaled convergence experiment", c6}, {"7 bound audits", c7},
      {"8 stability reports", c8},           {"9 structural invariants", c9},
      {"10 determinism", c10}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Line l;
    try {
      l = fn();
    } catch (const std::exception& e) {
      l.pass = false;
      l.detail = std::string("exception: ") + e.what();
    }
    failed += !l.pass;
    std::printf("%s criterion %s: %s\n", l.pass ? "PASS" : "FAIL", name, l.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
