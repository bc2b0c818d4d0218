#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lmcf/laplace.hpp"

using namespace lmcf;
constexpr double kPi = std::numbers::pi;

namespace {
DiscreteLegendrian make(const char* model, const char* family, std::vector<int> res, double s = 0.0) {
  Parametrization p;
  p.family = family;
  p.amplitude = s;
  return build_immersion(SasakianModel::from_id(model), p, res);
}
}  // namespace

TEST(Laplace, StiffnessKernelIsConstants) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64}, 0.05);
  const auto op = assemble_laplace(L);
  EXPECT_LT(op.kernel_residual, 1e-10);
  EXPECT_LT((op.stiffness - op.stiffness.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(op.mass.minCoeff(), 0.0);
}

TEST(Laplace, FlatCircleSpectrum) {
  // unit-speed circle of length 2 pi: lambda_m = m^2 (double)
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64});
  const auto rep = spectrum(L, 4);
  EXPECT_NEAR(rep.eigenvalues[0], 0.0, 1e-14);
  EXPECT_NEAR(rep.eigenvalues[1], 1.0, 1e-8);
  EXPECT_NEAR(rep.eigenvalues[2], 1.0, 1e-8);
  EXPECT_NEAR(rep.eigenvalues[3], 4.0, 1e-8);
  EXPECT_NEAR(rep.eigenvalues[4], 4.0, 1e-8);
  for (std::size_t i = 1; i < rep.residuals.size(); ++i) EXPECT_LT(rep.residuals[i], 1e-8);
  EXPECT_LT(rep.orthonormality_error, 1e-8);
}

TEST(Laplace, CliffordTorusFlatLattice) {
  // g^{-1} = [[2,-1],[-1,2]] so lambda(k) = 2 k1^2 - 2 k1 k2 + 2 k2^2, smallest nonzero = 2 (multiplicity 6)
  const auto L = make("sphere5", "clifford_torus", {32, 32});
  const auto rep = spectrum(L, 7);
  for (int i = 1; i <= 6; ++i) EXPECT_NEAR(rep.eigenvalues[i], 2.0, 1e-4);
  EXPECT_NEAR(rep.eigenvalues[7], 6.0, 1e-4);
}

TEST(Laplace, PerturbedCircleEigenvalueContinuity) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {128}, 0.05);
  EXPECT_NEAR(lambda1(L), 1.0, 0.05);
}

TEST(Laplace, RefinementCauchy) {
  const double a = lambda1(make("hypcyl3", "hyperbolic_geodesic", {64}, 0.05));
  const double b = lambda1(make("hypcyl3", "hyperbolic_geodesic", {128}, 0.05));
  EXPECT_LT(std::abs(a - b), 1e-6);
}

TEST(Angle, MinimalGivesZero) {
  const auto L = make("sphere3", "great_circle", {64});
  const auto s = second_fundamental(L);
  const auto af = solve_angle(L, s.H);
  EXPECT_LT(af.alpha.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Angle, GaugeIndependenceAndConstant) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64}, 0.05);
  const auto H = second_fundamental(L).H;
  const auto a0 = solve_angle(L, H, Gauge::mean_zero);
  const auto a1 = solve_angle(L, H, Gauge::carry_constant, 0.7);
  EXPECT_NEAR(L.integrate(a0.alpha), 0.0, 1e-12);
  EXPECT_NEAR(L.integrate(a1.alpha), 0.7 * L.first().vol, 1e-10);
  const VectorXd d0 = L.diff().diff(a0.alpha, 0), d1 = L.diff().diff(a1.alpha, 0);
  EXPECT_LT((d0 - d1).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT(a0.residual_l2, kAngleTol * a0.H_l2 + 1e-10);
}

TEST(Angle, HeisenbergRoundCircleIsNotExact) {
  Parametrization p;
  p.family = "heisenberg_circle";
  p.central_quotient = true;
  const auto L = build_immersion(SasakianModel::from_id("heisenberg3"), p, {64});
  const auto H = second_fundamental(L).H;
  // oint H equals the total geodesic curvature of the projected unit circle
  EXPECT_NEAR(std::abs(cycle_integrals(L.grid(), H)[0]), 2 * kPi, 1e-10);
  EXPECT_THROW(solve_angle(L, H), NonExactMeanCurvature);
}

TEST(Angle, LinearizedAngleUnderDeformation) {
  // Centered difference in s of alpha for the hyperbolic circle deformed by f = cos(phi).
  // Linearization: d alpha / ds = -(Delta f + (K+2) f) = 2 cos(phi) (Delta f = -f, K+2 = -1).
  const double s = 1e-3;
  const auto Lp = make("hypcyl3", "hyperbolic_geodesic", {64}, s);
  const auto Lm = make("hypcyl3", "hyperbolic_geodesic", {64}, -s);
  const auto ap = solve_angle(Lp, second_fundamental(Lp).H);
  const auto am = solve_angle(Lm, second_fundamental(Lm).H);
  const auto Lp0 = make("hypcyl3", "hyperbolic_geodesic", {64});
  for (int x = 0; x < Lp0.nodes(); ++x) {
    const double deriv = (ap.alpha(x) - am.alpha(x)) / (2 * s);
    EXPECT_NEAR(deriv, 2.0 * std::cos(Lp0.grid().theta(x, 0)), 1e-5);
  }
}
