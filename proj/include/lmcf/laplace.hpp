#pragma once

// Laplace-Beltrami operator of the induced metric, its low spectrum, and the
// Legendrian-angle solve d alpha = H.
//
// Assembly is spectral-collocation Galerkin on both curves and tori:
//   stiffness = sum_ij D_i^T diag(g^{ij} dmu) D_j,   mass = diag(dmu)
// with D_i the Fourier first-derivative matrix. On even grids D_i annihilates
// the Nyquist mode, so a penalty at the top of the spectrum is added on that
// subspace; the kernel is then exactly the constants.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lmcf/errors.hpp"
#include "lmcf/immersion.hpp"

namespace lmcf {

struct LaplaceOperator {
  MatrixXd stiffness;
  VectorXd mass;  // lumped (diagonal) mass = dmu
  double kernel_residual = 0.0;
};

struct SpectralReport {
  std::vector<double> eigenvalues;   // lambda_0 = 0 followed by the first k nonzero
  MatrixXd eigenfunctions;           // columns, mass-orthonormal (column 0 constant)
  std::vector<double> residuals;     // relative ||K phi - lambda M phi||
  double orthonormality_error = 0.0;
  double lambda1() const { return eigenvalues.size() > 1 ? eigenvalues[1] : 0.0; }
};

enum class Gauge { mean_zero, carry_constant };

struct AngleField {
  VectorXd alpha;
  Gauge gauge = Gauge::mean_zero;
  double gauge_constant = 0.0;
  std::vector<double> cycle_integrals;
  double exactness_tol = 0.0;
  double residual_l2 = 0.0;  // ||d alpha - H||_{L^2}
  double H_l2 = 0.0;
};

constexpr double kAngleTol = 1e-8;

namespace detail {

/// Dense Fourier first-derivative matrix along an axis of the grid.
inline MatrixXd derivative_matrix(const DiscreteLegendrian& L, int axis) {
  const int N = L.nodes();
  MatrixXd Dm(N, N);
  VectorXd e = VectorXd::Zero(N);
  for (int j = 0; j < N; ++j) {
    e.setZero();
    e(j) = 1.0;
    Dm.col(j) = L.diff().diff(e, axis);
  }
  return Dm;
}

/// Orthogonal projector onto the Nyquist subspace of an axis (zero for odd N).
inline MatrixXd nyquist_projector(const PeriodicGrid& grid, int axis) {
  const int N = grid.size();
  MatrixXd Q = MatrixXd::Zero(N, N);
  const int Na = grid.extent(axis);
  if (Na % 2 != 0) return Q;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      const auto ma = grid.multi(a), mb = grid.multi(b);
      if (grid.dims() == 2 && ma[1 - axis] != mb[1 - axis]) continue;
      const int s = ((ma[axis] + mb[axis]) % 2 == 0) ? 1 : -1;
      Q(a, b) = double(s) / Na;
    }
  return Q;
}

/// Weighted L^2 norm of a 1-form w (n x nodes).
inline double one_form_l2(const DiscreteLegendrian& L, const MatrixXd& w) {
  const int n = L.n();
  double s = 0.0;
  for (int x = 0; x < L.nodes(); ++x)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += L.first().ginv(i * n + j, x) * w(i, x) * w(j, x) * L.first().dmu(x);
  return std::sqrt(std::max(0.0, s));
}

inline double one_form_l1(const DiscreteLegendrian& L, const MatrixXd& w) {
  const int n = L.n();
  double s = 0.0;
  for (int x = 0; x < L.nodes(); ++x) {
    double q = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q += L.first().ginv(i * n + j, x) * w(i, x) * w(j, x);
    s += std::sqrt(std::max(0.0, q)) * L.first().dmu(x);
  }
  return s;
}

}  // namespace detail

inline LaplaceOperator assemble_laplace(const DiscreteLegendrian& L) {
  const int n = L.n();
  const int N = L.nodes();
  const auto& ff = L.first();
  std::vector<MatrixXd> Dm(n);
  for (int i = 0; i < n; ++i) Dm[i] = detail::derivative_matrix(L, i);
  LaplaceOperator op;
  op.mass = ff.dmu;
  op.stiffness = MatrixXd::Zero(N, N);
  double top = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      VectorXd w(N);
      for (int x = 0; x < N; ++x) w(x) = ff.ginv(i * n + j, x) * ff.dmu(x);
      op.stiffness.noalias() += Dm[i].transpose() * w.asDiagonal() * Dm[j];
    }
  for (int a = 0; a < n; ++a) {
    const int Na = L.grid().extent(a);
    if (Na % 2 != 0) continue;
    double gmax = 0.0;
    for (int x = 0; x < N; ++x) gmax = std::max(gmax, ff.ginv(a * n + a, x));
    top = 0.25 * Na * Na * gmax;
    const MatrixXd Q = detail::nyquist_projector(L.grid(), a);
    op.stiffness.noalias() += top * Q * ff.dmu.asDiagonal() * Q;
  }
  op.stiffness = 0.5 * (op.stiffness + op.stiffness.transpose()).eval();
  const VectorXd ones = VectorXd::Ones(N);
  op.kernel_residual = (op.stiffness * ones).cwiseAbs().maxCoeff() /
                       std::max(1.0, op.stiffness.cwiseAbs().maxCoeff());
  return op;
}

/// First k nonzero eigenpairs of stiffness phi = lambda mass phi (constants deflated).
inline SpectralReport spectrum(const DiscreteLegendrian& L, int k) {
  if (k < 1) throw SchemaError("spectrum needs k >= 1");
  const LaplaceOperator op = assemble_laplace(L);
  const int N = L.nodes();
  if (k + 1 > N) throw SchemaError("k exceeds the number of grid nodes");
  const VectorXd s = op.mass.cwiseSqrt().cwiseInverse();
  const MatrixXd S = s.asDiagonal() * op.stiffness * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw EigSolveFailure("symmetric eigensolver did not converge");
  SpectralReport rep;
  rep.eigenfunctions.resize(N, k + 1);
  for (int i = 0; i <= k; ++i) {
    const double lam = std::max(0.0, es.eigenvalues()(i));
    VectorXd phi = s.asDiagonal() * es.eigenvectors().col(i);
    // fix sign for determinism: largest-magnitude entry positive
    Eigen::Index imax;
    phi.cwiseAbs().maxCoeff(&imax);
    if (phi(imax) < 0) phi = -phi;
    rep.eigenfunctions.col(i) = phi;
    rep.eigenvalues.push_back(i == 0 ? 0.0 : lam);
    const VectorXd Mphi = op.mass.cwiseProduct(phi);
    const VectorXd r = op.stiffness * phi - lam * Mphi;
    const double scale = std::max(lam * Mphi.norm(), 1e-300);
    rep.residuals.push_back(i == 0 ? (op.stiffness * phi).norm() / std::max(1.0, op.stiffness.norm())
                                   : r.norm() / scale);
  }
  const MatrixXd G = rep.eigenfunctions.transpose() * op.mass.asDiagonal() * rep.eigenfunctions;
  rep.orthonormality_error = (G - MatrixXd::Identity(k + 1, k + 1)).cwiseAbs().maxCoeff();
  if (es.eigenvalues()(1) < 1e-10)
    throw EigSolveFailure("Laplacian kernel is larger than the constants");
  return rep;
}

inline double lambda1(const DiscreteLegendrian& L) { return spectrum(L, 1).lambda1(); }

/// Least-squares solve of d alpha = H in the weak form. Throws
/// NonExactMeanCurvature if a fundamental-cycle integral of H exceeds
/// exactness_tol = 1e-6 max(1, ||H||_{L^1}).
inline AngleField solve_angle(const DiscreteLegendrian& L, const MatrixXd& H,
                              Gauge gauge = Gauge::mean_zero, double c = 0.0) {
  const int n = L.n();
  const int N = L.nodes();
  AngleField out;
  out.gauge = gauge;
  out.gauge_constant = gauge == Gauge::carry_constant ? c : 0.0;
  out.cycle_integrals = cycle_integrals(L.grid(), H, true);
  out.exactness_tol = 1e-6 * std::max(1.0, detail::one_form_l1(L, H));
  for (double ci : out.cycle_integrals)
    if (std::abs(ci) > out.exactness_tol)
      throw NonExactMeanCurvature("cycle integral of H = " + std::to_string(ci) +
                                  " exceeds exactness tolerance " + std::to_string(out.exactness_tol));
  const auto& ff = L.first();
  // normal equations: K alpha = sum_i D_i^T diag(g^{ij} dmu) H_j, deflated by the mass vector
  VectorXd b = VectorXd::Zero(N);
  for (int i = 0; i < n; ++i) {
    VectorXd w = VectorXd::Zero(N);
    for (int x = 0; x < N; ++x)
      for (int j = 0; j < n; ++j) w(x) += ff.ginv(i * n + j, x) * H(j, x) * ff.dmu(x);
    // D^T w = -D w for the skew Fourier derivative
    b -= L.diff().diff(w, i);
  }
  const LaplaceOperator op = assemble_laplace(L);
  MatrixXd A = op.stiffness;
  const VectorXd m = op.mass / op.mass.sum();
  A.noalias() += op.stiffness.diagonal().maxCoeff() * (op.mass * m.transpose() + m * op.mass.transpose());
  Eigen::LDLT<MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw EigSolveFailure("angle normal equations not factorizable");
  VectorXd alpha = ldlt.solve(b);
  alpha.array() -= L.integrate(alpha) / ff.vol;
  if (gauge == Gauge::carry_constant) alpha.array() += c;
  out.alpha = alpha;
  MatrixXd da(n, N);
  for (int i = 0; i < n; ++i) da.row(i) = L.diff().diff(alpha, i).transpose();
  out.residual_l2 = detail::one_form_l2(L, da - H);
  out.H_l2 = detail::one_form_l2(L, H);
  if (!alpha.allFinite()) throw NonFiniteState("angle solve produced non-finite values");
  return out;
}

/// Weighted residual ||d alpha - H||_{L^2}.
inline double angle_drift(const DiscreteLegendrian& L, const VectorXd& alpha, const MatrixXd& H) {
  MatrixXd da(L.n(), L.nodes());
  for (int i = 0; i < L.n(); ++i) da.row(i) = L.diff().diff(alpha, i).transpose();
  return detail::one_form_l2(L, da - H);
}

}  // namespace lmcf
