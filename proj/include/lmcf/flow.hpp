#pragma once

// Legendrian mean curvature flow dF/dt = -grad^k(alpha) v_k - 2 alpha T coupled
// to the angle equation d alpha/dt = Delta alpha + (K+2) alpha, integrated by
// classical RK4 on (F, alpha) followed by the Reeb-direction projection.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "lmcf/errors.hpp"
#include "lmcf/immersion.hpp"
#include "lmcf/laplace.hpp"

namespace lmcf {

/// Largest dt / h_min^2 for which RK4 is stable on the Fourier Laplacian
/// (|z| <= 2.78 on the negative real axis, top symbol pi^2 / h^2).
constexpr double kStableCfl = 0.28;

struct FlowOptions {
  double cfl = 0.2;
  bool reeb_term = true;        // keep -2 alpha T (switch off only for diagnostics)
  bool project = true;          // Reeb projection after each step
  double drift_rel = 1e-6;      // angle drift tolerance relative to ||H||_{L^2}
  double drift_abs = 1e-9;
  double stale_factor = 1e3;    // velocity() refuses alpha whose drift exceeds this x tolerance
};

struct StepReport {
  double dt = 0.0;
  double max_velocity = 0.0;
  double legendrian_residual = 0.0;
  double projection_correction = 0.0;
  double angle_drift = 0.0;
  bool drift_corrected = false;
  bool converged = false;
  bool blowup = false;
};

struct FlowState {
  double t = 0.0;
  DiscreteLegendrian L;
  VectorXd alpha;
  long step = 0;
  StepReport last;
  SecondFundamentalData sff;  // of L
};

inline double drift_tolerance(const FlowOptions& o, double H_l2) { return o.drift_rel * H_l2 + o.drift_abs; }

/// Effective grid spacing pi / sqrt(rho), rho the largest Fourier symbol
/// g^{ij} k_i k_j of the Laplacian over |k_a| <= N_a/2. On curves this is the
/// smallest spacing in the induced metric; on tori it also accounts for both
/// axes and the off-diagonal metric.
inline double h_min(const DiscreteLegendrian& L) {
  const int n = L.n();
  double rho = 0.0;
  for (int x = 0; x < L.nodes(); ++x) {
    double r = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        r += std::abs(L.first().ginv(i * n + j, x)) * 0.25 * L.grid().extent(i) * L.grid().extent(j);
    rho = std::max(rho, r);
  }
  return std::numbers::pi / std::sqrt(rho);
}

/// V = -grad^k(alpha) v_k - 2 alpha T per node (D x nodes).
inline MatrixXd velocity(const DiscreteLegendrian& L, const VectorXd& alpha, bool reeb_term = true) {
  const int n = L.n();
  const MatrixXd up = L.gradient_coeffs(alpha);
  MatrixXd V(L.model().coord_dim(), L.nodes());
  for (int x = 0; x < L.nodes(); ++x) {
    VectorXd v = VectorXd::Zero(L.model().coord_dim());
    for (int k = 0; k < n; ++k) v -= up(k, x) * L.first().normal[k].col(x);
    if (reeb_term) v -= 2.0 * alpha(x) * L.frames()[x].reeb;
    V.col(x) = v;
  }
  return V;
}

/// velocity() with the staleness check against the current mean curvature form.
inline MatrixXd checked_velocity(const DiscreteLegendrian& L, const VectorXd& alpha, const MatrixXd& H,
                                 const FlowOptions& o = {}) {
  const double drift = angle_drift(L, alpha, H);
  const double tol = drift_tolerance(o, detail::one_form_l2(L, H)) * o.stale_factor;
  if (drift > tol)
    throw StaleAngle("||d alpha - H|| = " + std::to_string(drift) + " exceeds " + std::to_string(tol));
  return velocity(L, alpha, o.reeb_term);
}

/// Initial state: alpha from solve_angle with the mean-zero gauge.
inline FlowState initial_state(const DiscreteLegendrian& L) {
  FlowState s{0.0, L, VectorXd(), 0, StepReport{}, second_fundamental(L)};
  try {
    s.alpha = solve_angle(L, s.sff.H, Gauge::mean_zero).alpha;
  } catch (const NonExactMeanCurvature& e) {
    throw InitialDataNotExact(e.what());
  }
  s.last.legendrian_residual = L.first().legendrian_residual;
  return s;
}

inline FlowState step(const FlowState& s, double dt, const FlowOptions& o = {}) {
  const DiscreteLegendrian& L = s.L;
  const double hm = h_min(L);
  if (!(dt > 0.0) || dt > kStableCfl * hm * hm * (1.0 + 1e-12))
    throw CFLViolation("dt = " + std::to_string(dt) + " exceeds stability bound " +
                       std::to_string(kStableCfl * hm * hm));
  const double K2 = L.model().eta_einstein_constant();
  const bool embedded = L.model().embedded();

  auto rhs = [&](const MatrixXd& P, const VectorXd& a, MatrixXd& dP, VectorXd& da) {
    const DiscreteLegendrian Ls = L.with_positions(P);
    dP = velocity(Ls, a, o.reeb_term);
    da = Ls.laplacian(a) + K2 * a;
  };
  const MatrixXd& P0 = L.positions();
  const VectorXd& a0 = s.alpha;
  MatrixXd k1, k2, k3, k4;
  VectorXd m1, m2, m3, m4;
  rhs(P0, a0, k1, m1);
  rhs(P0 + 0.5 * dt * k1, a0 + 0.5 * dt * m1, k2, m2);
  rhs(P0 + 0.5 * dt * k2, a0 + 0.5 * dt * m2, k3, m3);
  rhs(P0 + dt * k3, a0 + dt * m3, k4, m4);
  MatrixXd P = P0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  VectorXd a = a0 + dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
  if (!P.allFinite() || !a.allFinite()) throw NonFiniteState("non-finite state after RK4 step");
  if (embedded) P.colwise().normalize();

  FlowState out{s.t + dt, L.with_positions(std::move(P)), std::move(a), s.step + 1, StepReport{}, {}};
  out.last.dt = dt;
  out.last.max_velocity = k1.colwise().norm().maxCoeff();
  if (o.project) {
    auto pr = project_legendrian(out.L);
    out.last.projection_correction = pr.correction;
    out.L = std::move(pr.L);
  }
  out.last.legendrian_residual = out.L.first().legendrian_residual;
  out.sff = second_fundamental(out.L);
  const double drift = angle_drift(out.L, out.alpha, out.sff.H);
  out.last.angle_drift = drift;
  if (drift > drift_tolerance(o, detail::one_form_l2(out.L, out.sff.H))) {
    const double mean = out.L.integrate(out.alpha) / out.L.first().vol;
    out.alpha = solve_angle(out.L, out.sff.H, Gauge::carry_constant, mean).alpha;
    out.last.drift_corrected = true;
  }
  return out;
}

}  // namespace lmcf
