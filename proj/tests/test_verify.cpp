#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "lmcf/verify.hpp"
#include "lmcf/verify_evolution.hpp"

using namespace lmcf;

namespace {

std::map<std::string, ResidualReport> by_id(const std::vector<ResidualReport>& v) {
  std::map<std::string, ResidualReport> m;
  for (const auto& r : v) m[r.id] = r;
  return m;
}

DiscreteLegendrian make(const std::string& model, Parametrization p, std::vector<int> res) {
  return build_immersion(SasakianModel::from_id(model), p, res);
}

/// Cyclic relabelling of the grid origin.
DiscreteLegendrian rolled(const DiscreteLegendrian& L, int s0, int s1) {
  MatrixXd P(L.positions().rows(), L.nodes());
  for (int x = 0; x < L.nodes(); ++x) {
    auto mi = L.grid().multi(x);
    std::array<int, 2> src = mi;
    src[0] = (mi[0] + s0) % L.grid().extent(0);
    if (L.grid().dims() == 2) src[1] = (mi[1] + s1) % L.grid().extent(1);
    P.col(x) = L.positions().col(L.grid().index(src[0], src[1]));
  }
  return L.with_positions(P);
}

}  // namespace

TEST(SubmanifoldIdentities, GreatCircleAllBelow1e8) {
  const auto r = submanifold_identity_residuals(make("sphere3", {"great_circle", 0.0}, {64}));
  for (const auto& x : r)
    if (!x.informational) EXPECT_LT(x.max_residual, 1e-8) << x.id;
}

TEST(SubmanifoldIdentities, CliffordTorusGaussAndSimons) {
  const auto r = by_id(submanifold_identity_residuals(make("sphere5", {"clifford_torus", 0.0}, {32, 32})));
  EXPECT_LT(r.at("gauss").max_residual, 1e-5);
  EXPECT_LT(r.at("simons").max_residual, 1e-4);
  EXPECT_LT(r.at("codazzi").max_residual, 1e-5);
  EXPECT_LT(r.at("traced_gauss").max_residual, 1e-5);
  for (const auto& [id, x] : r) EXPECT_TRUE(x.pass) << id;
}

TEST(SubmanifoldIdentities, SphereHasNoCurvatureDerivativeTerms) {
  const auto L = make("sphere5", {"clifford_torus", 0.05}, {16, 16});
  const auto P = detail::ambient_pullback(L, 7, true);
  for (double v : P.dR) EXPECT_EQ(v, 0.0);
  const auto Lh = make("hypcyl3", {"hyperbolic_geodesic", 0.05}, {32});
  const auto Ph = detail::ambient_pullback(Lh, 3, true);
  double m = 0.0;
  for (double v : Ph.dR) m = std::max(m, std::abs(v));
  EXPECT_GT(m, 1e-3);
}

TEST(SubmanifoldIdentities, PerturbedHyperbolicCodazziAndRefinement) {
  const SasakianModel m = SasakianModel::from_id("hypcyl3");
  const Parametrization p{"hyperbolic_geodesic", 0.05};
  const auto r = by_id(submanifold_identity_residuals(build_immersion(m, p, {256})));
  EXPECT_LT(r.at("codazzi").max_residual, 1e-6);
  for (const auto& row : identity_refinement(m, p, {256})) EXPECT_TRUE(row.pass) << row.id;
}

TEST(SubmanifoldIdentities, RefinementOnNontrivialFamilies) {
  for (const auto& row :
       identity_refinement(SasakianModel::from_id("sphere5"), {"clifford_torus", 0.05}, {32, 32}))
    EXPECT_TRUE(row.pass) << row.id;
  for (const auto& row :
       identity_refinement(SasakianModel::from_id("heisenberg3"), {"heisenberg_lemniscate", 0.0}, {256}))
    EXPECT_TRUE(row.pass) << row.id;
}

TEST(SubmanifoldIdentities, UnderResolvedLemniscateFailsItsThreshold) {
  const auto r = by_id(submanifold_identity_residuals(make("heisenberg3", {"heisenberg_lemniscate", 0.0}, {64})));
  EXPECT_FALSE(r.at("simons").pass);
  EXPECT_GT(r.at("simons").max_residual, 1e-3);
}

TEST(SubmanifoldIdentities, SimonsHandReductionMatchesIndexForm) {
  for (const char* model : {"sphere3", "hypcyl3"}) {
    const std::string fam = std::string(model) == "sphere3" ? "great_circle" : "hyperbolic_geodesic";
    const auto r = by_id(submanifold_identity_residuals(make(model, {fam, 0.2}, {128})));
    EXPECT_LT(r.at("simons_n1_crosscheck").max_residual, 1e-10) << model;
  }
}

TEST(SubmanifoldIdentities, LiteralFormsAreConventionNotes) {
  const auto r = by_id(submanifold_identity_residuals(make("sphere5", {"clifford_torus", 0.0}, {32, 32})));
  // H = 0 and h parallel: the derived form vanishes, the literal grouping leaves 2
  EXPECT_TRUE(r.at("simons_literal").informational);
  EXPECT_NEAR(r.at("simons_literal").max_residual, 2.0, 1e-6);
  EXPECT_TRUE(r.at("traced_gauss_literal").informational);
  EXPECT_NEAR(r.at("traced_gauss_literal").max_residual, 2.0, 1e-6);
}

TEST(SubmanifoldIdentities, SimonsInvariantUnderOriginRelabel) {
  const auto c = make("sphere3", {"great_circle", 0.1}, {64});
  const auto a = by_id(submanifold_identity_residuals(c));
  const auto b = by_id(submanifold_identity_residuals(rolled(c, 17, 0)));
  EXPECT_NEAR(a.at("simons").max_residual, b.at("simons").max_residual, 1e-11);
  EXPECT_NEAR(a.at("simons_literal").max_residual, b.at("simons_literal").max_residual, 1e-10);
  const auto t = make("sphere5", {"clifford_torus", 0.05}, {16, 16});
  const auto ta = by_id(submanifold_identity_residuals(t));
  const auto tb = by_id(submanifold_identity_residuals(rolled(t, 5, 11)));
  EXPECT_NEAR(ta.at("simons_literal").max_residual, tb.at("simons_literal").max_residual, 1e-8);
}

namespace {
ExperimentConfig golden32() {
  ExperimentConfig cfg;
  cfg.resolution = {32};
  return cfg;
}
}  // namespace

TEST(EvolutionResiduals, GoldenOrderStudy) {
  ExperimentConfig cfg = golden32();
  const auto L0 = build_immersion(SasakianModel::from_id(cfg.model), cfg.init, cfg.resolution);
  const double hm = h_min(L0);
  const auto r = by_id(evolution_order_study(cfg, 0.3, 0.25 * hm * hm));
  for (const char* id : {"V", "angle", "2", "H", "21", "i", "j", "A", "26"}) {
    EXPECT_GE(r.at(id).measured_order, 3.5) << id;
    EXPECT_LE(r.at(id).measured_order, 4.5) << id;
    EXPECT_TRUE(r.at(id).pass) << id;
  }
  for (const char* id : {"H_literal", "j_literal", "A_literal"}) {
    EXPECT_TRUE(r.at(id).informational);
    EXPECT_GT(r.at(id).max_residual, 1e-3) << id;
  }
}

TEST(EvolutionResiduals, AngleResidualAtSmallStep) {
  ExperimentConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_max = 2e-3;
  cfg.spectral_every = 1000000;
  const auto r = by_id(evolution_residuals(record_trajectory(cfg), {"angle"}));
  EXPECT_LT(r.at("angle").max_residual, 1e-6);
}

TEST(EvolutionResiduals, StationaryMinimalStateIsExact) {
  ExperimentConfig cfg = golden32();
  cfg.init.amplitude = 0.0;
  cfg.t_max = 0.05;
  cfg.spectral_every = 1000000;
  for (const auto& r : evolution_residuals(record_trajectory(cfg)))
    EXPECT_LT(r.max_residual, 1e-12) << r.id;
}

TEST(EvolutionResiduals, Errors) {
  RecordedTrajectory empty;
  EXPECT_THROW(evolution_residuals(empty), InsufficientData);
  ExperimentConfig cfg = golden32();
  cfg.t_max = 0.05;
  cfg.spectral_every = 1000000;
  const auto rec = record_trajectory(cfg);
  EXPECT_THROW(evolution_residuals(rec, {"nope"}), SchemaError);
  EXPECT_THROW(evolution_residuals(rec, {"V"}, 10.0, 11.0), InsufficientData);
}
