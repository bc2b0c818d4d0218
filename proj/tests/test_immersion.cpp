#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lmcf/immersion.hpp"

using namespace lmcf;
constexpr double kPi = std::numbers::pi;

namespace {
DiscreteLegendrian make(const char* model, const char* family, std::vector<int> res, double s = 0.0,
                        const char* pot = "cos") {
  Parametrization p;
  p.family = family;
  p.amplitude = s;
  p.potential = pot;
  return build_immersion(SasakianModel::from_id(model), p, res);
}
}  // namespace

TEST(Spectral, DerivativesOfTrigPolynomials) {
  PeriodicGrid g({32});
  SpectralDiff d(g);
  VectorXd f(32), df(32), d2f(32);
  for (int i = 0; i < 32; ++i) {
    const double t = g.theta(i, 0);
    f(i) = std::sin(3 * t) + std::cos(t);
    df(i) = 3 * std::cos(3 * t) - std::sin(t);
    d2f(i) = -9 * std::sin(3 * t) - std::cos(t);
  }
  EXPECT_LT((d.diff(f, 0) - df).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((d.diff(f, 0, 2) - d2f).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Spectral, WoundCoordinateAndGradientIntegration2D) {
  PeriodicGrid g({16, 24});
  SpectralDiff d(g);
  VectorXd f(g.size()), c(g.size());
  for (int x = 0; x < g.size(); ++x) {
    const double a = g.theta(x, 0), b = g.theta(x, 1);
    c(x) = std::sin(a) * std::cos(2 * b);
    f(x) = 2.0 * b + c(x);
  }
  const VectorXd fb = d.diff_wound(f, {0.0, 2.0}, 1);
  VectorXd expect(g.size());
  for (int x = 0; x < g.size(); ++x)
    expect(x) = 2.0 - 2.0 * std::sin(g.theta(x, 0)) * std::sin(2 * g.theta(x, 1));
  EXPECT_LT((fb - expect).cwiseAbs().maxCoeff(), 1e-12);
  const VectorXd c2 = d.integrate_gradient({d.diff(c, 0), d.diff(c, 1)});
  EXPECT_LT((c2 - c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Immersion, GreatCircleLegendrianAndMinimal) {
  const auto L = make("sphere3", "great_circle", {256});
  EXPECT_LT(L.first().legendrian_residual, 1e-12);
  EXPECT_NEAR(L.first().vol, 2 * kPi, 1e-10);
  const auto s = second_fundamental(L);
  EXPECT_LT(s.max_H(), 1e-8);
}

TEST(Immersion, CliffordTorus) {
  const auto L = make("sphere5", "clifford_torus", {32, 32});
  EXPECT_LT(L.first().legendrian_residual, 1e-10);
  // flat metric g = [[2/3,1/3],[1/3,2/3]], sqrt det = 1/sqrt 3, Vol = 4 pi^2 / sqrt 3
  EXPECT_NEAR(L.first().g(0, 0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(L.first().g(1, 0), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(L.first().vol, 4 * kPi * kPi / std::sqrt(3.0), 1e-10);
  const auto L64 = make("sphere5", "clifford_torus", {64, 64});
  EXPECT_NEAR(L.first().vol, L64.first().vol, 1e-8);
  const auto s = second_fundamental(L);
  EXPECT_LT(s.max_H(), 1e-6);
  EXPECT_LT(s.symmetry_residual, 1e-6);
  EXPECT_LT(s.reeb_residual, 1e-6);
  // |A|^2 of the minimal Clifford Legendrian torus: |h|^2 = 2 (oracle from the flat lattice data)
  EXPECT_GT(s.max_A_sq, 0.0);
}

TEST(Immersion, HyperbolicGeodesicLift) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64});
  for (int x = 0; x < L.nodes(); ++x) EXPECT_NEAR(L.first().g(0, x), 1.0, 1e-14);
  EXPECT_LT(second_fundamental(L).max_H(), 1e-8);
  EXPECT_NEAR(L.point(63).coords(1), 2 * kPi * 63 / 64, 1e-14);
}

TEST(Immersion, LemniscateClosesAndIsSymmetric) {
  const auto L = make("heisenberg3", "heisenberg_lemniscate", {64});
  EXPECT_LT(L.first().legendrian_residual, 1e-12);
  const auto s = second_fundamental(L);
  EXPECT_LT(s.reeb_residual, 1e-6);
  EXPECT_GT(s.max_H(), 0.1);
  const auto L5 = make("heisenberg5", "heisenberg_lemniscate", {32, 32});
  const auto s5 = second_fundamental(L5);
  EXPECT_LT(s5.symmetry_residual, 1e-6);
}

TEST(Immersion, RoundHeisenbergCircleNeedsQuotient) {
  Parametrization p;
  p.family = "heisenberg_circle";
  EXPECT_THROW(build_immersion(SasakianModel::from_id("heisenberg3"), p, {64}), NotClosable);
  p.central_quotient = true;
  const auto L = build_immersion(SasakianModel::from_id("heisenberg3"), p, {64});
  EXPECT_LT(L.first().legendrian_residual, 1e-12);
}

TEST(Immersion, FamilyModelMismatchRejected) {
  EXPECT_THROW(make("sphere5", "great_circle", {64}), SchemaError);
  EXPECT_THROW(make("sphere3", "great_circle", {8}), ResolutionTooLow);
}

TEST(Immersion, OversizedAmplitudeIsNotClosable) {
  const SasakianModel m = SasakianModel::from_id("hypcyl3");
  EXPECT_THROW(build_immersion(m, {"hyperbolic_geodesic", 5.0}, {128}), NotClosable);
  EXPECT_NO_THROW(build_immersion(m, {"hyperbolic_geodesic", 0.5}, {128}));
}

TEST(Immersion, DeformedGreatCircleFollowsSecondVariation) {
  // f = cos(theta) has lambda_1 = 1 < K+2 = 4, so the second variation
  // 1 * (1 - 4) * pi = -3 pi is negative and the length drops by 3 pi s^2 / 2.
  const double s = 0.05;
  const auto L = make("sphere3", "great_circle", {128}, s);
  EXPECT_LT(L.first().legendrian_residual, 1e-8);
  EXPECT_NEAR(L.first().vol, 2 * kPi - 1.5 * kPi * s * s, 1e-4);
  EXPECT_LT(L.first().vol, 2 * kPi);
}

TEST(Immersion, DeformedHyperbolicCircleStaysExact) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {128}, 0.05);
  const auto s = second_fundamental(L);
  const auto ci = cycle_integrals(L.grid(), s.H);
  EXPECT_LT(std::abs(ci[0]), 1e-8);
  EXPECT_GT(s.max_H(), 1e-3);
}

TEST(Immersion, DeformationIdentityAndReversibility) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64});
  const VectorXd f = potential_on_grid(L.grid(), "cos", 1);
  EXPECT_EQ(sup_distance(legendrian_deform(L, f, 0.0), L), 0.0);
  const auto Ls = legendrian_deform(L, f, 0.05);
  const auto back = legendrian_deform(Ls, f, -0.05);
  EXPECT_LT(sup_distance(back, L), 1e-6);
  // lambda(X) = 2 f
  const auto d = make_deformation_field(Ls, f);
  for (int x = 0; x < Ls.nodes(); ++x)
    EXPECT_NEAR(Ls.frames()[x].lambda.dot(d.X.col(x)), 2 * f(x), 1e-8);
}

TEST(Immersion, ProjectionRemovesReebNoise) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64});
  MatrixXd P = L.positions();
  VectorXd noise(L.nodes());
  for (int x = 0; x < L.nodes(); ++x) noise(x) = 1e-4 * std::sin(3 * L.grid().theta(x, 0));
  P.row(2) += noise.transpose();
  const auto res = project_legendrian(L.with_positions(P));
  EXPECT_LT(res.residual_after, 1e-8);
  EXPECT_NEAR(res.correction, 1e-4, 1e-9);
  EXPECT_LT(sup_distance(res.L, L), 1e-10);
  EXPECT_EQ(project_legendrian(L).correction, 0.0);
}

TEST(Immersion, ProjectionDetectsHolonomy) {
  // lemniscate with z stretched by a linear drift that does not close: inject holonomy 1e-3
  const auto L = make("heisenberg3", "heisenberg_lemniscate", {64});
  MatrixXd P = L.positions();
  for (int x = 0; x < L.nodes(); ++x) P(0, x) += 1e-3 / kPi * std::cos(L.grid().theta(x, 0)) * 0.0;
  // y -> y + eps changes the holonomy of lambda = dz - y dx by -eps * oint dx = 0; use x-dependent y shift
  for (int x = 0; x < L.nodes(); ++x) {
    const double t = L.grid().theta(x, 0);
    P(1, x) += 1e-3 / kPi * std::cos(t);  // oint (cos t)(x' = cos t) dt = pi
  }
  EXPECT_THROW(project_legendrian(L.with_positions(P)), HolonomyObstruction);
}
