#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "lmcf/flow.hpp"
#include "lmcf/run.hpp"

using namespace lmcf;

namespace {

DiscreteLegendrian make(const std::string& model, const std::string& fam, std::vector<int> res, double s = 0.0) {
  return build_immersion(SasakianModel::from_id(model), {fam, s}, res);
}

FlowState evolve(FlowState s, double dt, int steps, const FlowOptions& o = {}) {
  for (int k = 0; k < steps; ++k) s = step(s, dt, o);
  return s;
}

}  // namespace

TEST(Flow, MinimalCurveIsAFixedPoint) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64});
  const double hm = h_min(L);
  const FlowState s = evolve(initial_state(L), 0.2 * hm * hm, 50);
  EXPECT_LT((s.L.positions() - L.positions()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(s.alpha.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Flow, ConstantAngleIsAReebTranslation) {
  // alpha = c on the great circle: alpha' = 4 alpha, F moves along T by -c (e^{4t} - 1) / 2
  const auto L = make("sphere3", "great_circle", {32});
  FlowState s = initial_state(L);
  const double c = 0.1;
  s.alpha.setConstant(c);
  const double hm = h_min(L);
  const int steps = 1000;
  const double dt = 0.02 * hm * hm;
  s = evolve(s, dt, steps);
  const double t = steps * dt;
  EXPECT_NEAR(s.alpha.mean(), c * std::exp(4.0 * t), 1e-10);
  const double shift = c * (std::exp(4.0 * t) - 1.0) / 2.0;
  // the Reeb orbits are unit-speed great circles, chord = 2 sin(shift / 2)
  for (int x = 0; x < L.nodes(); ++x)
    EXPECT_NEAR((s.L.positions().col(x) - L.positions().col(x)).norm(), 2.0 * std::sin(shift / 2.0), 1e-9);
  // and backwards along T
  const double dir = (s.L.positions().col(0) - L.positions().col(0)).dot(L.frames()[0].reeb);
  EXPECT_LT(dir, 0.0);
}

TEST(Flow, VolumeDecreasesOnGoldenRun) {
  ExperimentConfig cfg;
  cfg.resolution = {32};
  cfg.t_max = 0.5;
  cfg.spectral_every = 1000000;
  const auto r = run(cfg);
  for (std::size_t k = 1; k < r.trajectory.size(); ++k)
    EXPECT_LE(r.trajectory[k].vol, r.trajectory[k - 1].vol + 1e-10) << k;
  EXPECT_LT(r.trajectory.back().vol, r.trajectory.front().vol);
}

TEST(Flow, RK4GlobalOrder) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {32}, 0.05);
  const double hm = h_min(L);
  const double T = 0.2;
  auto final_at = [&](int steps) { return evolve(initial_state(L), T / steps, steps).L.positions(); };
  const int n0 = static_cast<int>(std::ceil(T / (0.25 * hm * hm)));
  const MatrixXd a = final_at(n0), b = final_at(2 * n0), c = final_at(4 * n0);
  const double e1 = (a - b).cwiseAbs().maxCoeff(), e2 = (b - c).cwiseAbs().maxCoeff();
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.3) << e1 << " " << e2;
}

TEST(Flow, ReebTermOffBreaksTheLegendrianCondition) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64}, 0.05);
  const double hm = h_min(L);
  FlowOptions with, without;
  without.reeb_term = false;
  without.project = false;
  with.project = false;
  const double dt = 0.2 * hm * hm;
  const auto a = evolve(initial_state(L), dt, 100, with);
  const auto b = evolve(initial_state(L), dt, 100, without);
  EXPECT_LT(a.last.legendrian_residual, 1e-7);
  EXPECT_GT(b.last.legendrian_residual, 100.0 * std::max(a.last.legendrian_residual, 1e-10));
}

TEST(Flow, HMinOnCurveAndTorus) {
  const auto c = make("sphere3", "great_circle", {64});
  // unit-speed circle of length 2 pi: spacing 2 pi / 64
  EXPECT_NEAR(h_min(c), 2.0 * std::numbers::pi / 64.0, 1e-12);
  const auto t = make("sphere5", "clifford_torus", {32, 32});
  // (e^{i a}, e^{i b}, e^{-i(a+b)}) / sqrt 3: g^{-1} = [[2,-1],[-1,2]], rho = 6 * 16^2
  EXPECT_NEAR(h_min(t), std::numbers::pi / std::sqrt(6.0 * 256.0), 1e-10);
}

TEST(FlowErrors, CFLViolation) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64}, 0.05);
  const double hm = h_min(L);
  EXPECT_THROW(step(initial_state(L), 0.3 * hm * hm), CFLViolation);
  EXPECT_THROW(step(initial_state(L), -1e-6), CFLViolation);
  EXPECT_NO_THROW(step(initial_state(L), kStableCfl * hm * hm));
}

TEST(FlowErrors, StaleAngle) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64}, 0.05);
  const FlowState s = initial_state(L);
  EXPECT_NO_THROW(checked_velocity(L, s.alpha, s.sff.H));
  VectorXd wrong = s.alpha;
  for (int x = 0; x < L.nodes(); ++x) wrong(x) += 0.1 * std::sin(3.0 * L.grid().theta(x, 0));
  EXPECT_THROW(checked_velocity(L, wrong, s.sff.H), StaleAngle);
}

TEST(FlowErrors, HeisenbergCircleHasNoAngle) {
  Parametrization p{"heisenberg_circle", 0.0};
  p.central_quotient = true;
  const auto L = build_immersion(SasakianModel::from_id("heisenberg3"), p, {64});
  EXPECT_THROW(initial_state(L), InitialDataNotExact);
}

TEST(FlowErrors, NonFiniteState) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64}, 0.05);
  FlowState s = initial_state(L);
  s.alpha(3) = std::numeric_limits<double>::quiet_NaN();
  const double hm = h_min(L);
  EXPECT_THROW(step(s, 0.1 * hm * hm), NonFiniteState);
}

TEST(Run, DefaultStepShrinksWithAContractingCurve) {
  // perturbed great circle in S^3 is unstable and shortens, so h_min drops
  ExperimentConfig cfg;
  cfg.model = "sphere3";
  cfg.init = {"great_circle", 0.1};
  cfg.resolution = {64};
  cfg.t_max = 0.5;
  const auto r = run(cfg);
  EXPECT_GT(r.dt_reductions, 0);
  EXPECT_LT(r.min_dt, r.dt);
  EXPECT_GE(r.final_state->t, cfg.t_max - 1e-12);
  for (std::size_t k = 1; k < r.trajectory.size(); ++k) EXPECT_LE(r.trajectory[k].vol, r.trajectory[k - 1].vol + 1e-10);

  cfg.dt = r.dt;  // an explicit step is never changed
  EXPECT_THROW(run(cfg), CFLViolation);
}
