#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lmcf/ambient.hpp"

using namespace lmcf;

namespace {

ChartPoint pt(const SasakianModel& m, std::initializer_list<double> c) {
  VectorXd v(static_cast<int>(c.size()));
  int i = 0;
  for (double x : c) v(i++) = x;
  return make_chart_point(m, v);
}

}  // namespace

TEST(Ambient, UnknownModelRejected) {
  EXPECT_THROW(SasakianModel::from_id("torus7"), UnknownModel);
}

TEST(Ambient, SpherePointMustBeUnit) {
  const auto m = SasakianModel::from_id("sphere3");
  VectorXd p(4);
  p << 1.0, 0.0, 0.1, 0.0;
  EXPECT_THROW(make_chart_point(m, p), PointOutsideChart);
  EXPECT_THROW(frame_at(m, ChartPoint{p}), PointOutsideChart);
}

TEST(Ambient, HeisenbergFrameCalibration) {
  // lambda = dz - y dx, T = d_z, horizontal frame X = d_x + y d_z, Y = d_y has |X|^2 = |Y|^2 = 1/2.
  const auto m = SasakianModel::from_id("heisenberg3");
  const auto f = frame_at(m, pt(m, {0.3, -0.7, 1.1}));
  EXPECT_NEAR(f.reeb(0), 0.0, 1e-14);
  EXPECT_NEAR(f.reeb(1), 0.0, 1e-14);
  EXPECT_NEAR(f.reeb(2), 1.0, 1e-14);
  Eigen::Vector3d X(1.0, 0.0, -0.7), Y(0.0, 1.0, 0.0);
  EXPECT_NEAR(X.dot(f.g * X), 0.5, 1e-14);
  EXPECT_NEAR(Y.dot(f.g * Y), 0.5, 1e-14);
  EXPECT_NEAR(X.dot(f.g * Y), 0.0, 1e-14);
  // omega(X,Y) = 1/2 = g(JX,Y) and |Y|^2 = 1/2, so J X = Y.
  const VectorXd JX = f.J * X;
  EXPECT_NEAR((JX - Y).norm(), 0.0, 1e-14);
}

TEST(Ambient, SphereFrameAtNorthPole) {
  const auto m = SasakianModel::from_id("sphere3");
  const auto f = frame_at(m, pt(m, {1.0, 0.0, 0.0, 0.0}));
  // Reeb = i p
  EXPECT_NEAR(f.reeb(1), 1.0, 1e-15);
  EXPECT_NEAR(f.lambda.dot(f.reeb), 1.0, 1e-15);
}

TEST(Ambient, ConnectionSymmetricAndCompatible) {
  for (const char* id : {"heisenberg3", "heisenberg5", "hypcyl3", "sphere3", "sphere5"}) {
    const auto m = SasakianModel::from_id(id);
    for (const auto& p : sample_points(m, 5)) {
      const auto G = connection_at(m, p);
      const int D = m.coord_dim();
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
          for (int c = 0; c < D; ++c) EXPECT_NEAR(G(a, b, c), G(a, c, b), 1e-13) << id;
    }
    const auto rep = ambient_identity_residuals(m, sample_points(m, 5));
    if (rep.max_residual.count("metric_compatibility"))
      EXPECT_LT(rep.max_residual.at("metric_compatibility"), 1e-8) << id;
  }
}

TEST(Ambient, HeisenbergL0AtOrigin) {
  const auto m = SasakianModel::from_id("heisenberg3");
  const auto rep = ambient_identity_residuals(m, {pt(m, {0.0, 0.0, 0.0})});
  EXPECT_LT(rep.max_residual.at("L0"), 1e-8);
}

TEST(Ambient, HyperbolicL2AtFixedPoint) {
  const auto m = SasakianModel::from_id("hypcyl3");
  const auto rep = ambient_identity_residuals(m, {pt(m, {1.0, 0.0, 0.0})});
  EXPECT_LT(rep.max_residual.at("L2"), 1e-6);
}

TEST(Ambient, SphereAllIdentities) {
  for (const char* id : {"sphere3", "sphere5"}) {
    const auto m = SasakianModel::from_id(id);
    const auto rep = ambient_identity_residuals(m, sample_points(m, 100));
    for (const auto& [k, v] : rep.max_residual) EXPECT_LT(v, 1e-8) << id << " " << k;
  }
}

TEST(Ambient, ChartModelsAllIdentities) {
  for (const char* id : {"heisenberg3", "heisenberg5", "hypcyl3"}) {
    const auto m = SasakianModel::from_id(id);
    const auto rep = ambient_identity_residuals(m, sample_points(m, 100));
    for (const auto& [k, v] : rep.max_residual) EXPECT_LT(v, 1e-6) << id << " " << k;
  }
}

TEST(Ambient, FittedEtaEinsteinConstantMatchesStoredValue) {
  for (const char* id : {"heisenberg3", "heisenberg5", "hypcyl3", "sphere3", "sphere5"}) {
    const auto m = SasakianModel::from_id(id);
    const auto rep = ambient_identity_residuals(m, sample_points(m, 20));
    for (double k2 : rep.fitted_kplus2) EXPECT_NEAR(k2, m.eta_einstein_constant(), 1e-8) << id;
  }
  // Frozen oracle values: S^3 -> 4, S^5 -> 6, Heisenberg -> 0, hyperbolic cylinder -> -1.
  EXPECT_EQ(SasakianModel::from_id("sphere3").eta_einstein_constant(), 4.0);
  EXPECT_EQ(SasakianModel::from_id("sphere5").eta_einstein_constant(), 6.0);
  EXPECT_EQ(SasakianModel::from_id("heisenberg3").eta_einstein_constant(), 0.0);
  EXPECT_EQ(SasakianModel::from_id("hypcyl3").eta_einstein_constant(), -1.0);
}

TEST(Ambient, SphereCurvatureClosedForm) {
  const auto m = SasakianModel::from_id("sphere3");
  const auto c = curvature_at(m, pt(m, {0.0, 0.6, 0.8, 0.0}));
  EXPECT_EQ(c.evaluation_mode, EvaluationMode::closed_form);
  EXPECT_LT(c.nabla_riemann.max_abs(), 1e-15);
  // Ric = 2n g
  const auto f = frame_at(m, pt(m, {0.0, 0.6, 0.8, 0.0}));
  EXPECT_LT((c.ricci - 2.0 * f.g).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Ambient, SecondBianchiForChartModels) {
  for (const char* id : {"heisenberg3", "hypcyl3"}) {
    const auto m = SasakianModel::from_id(id);
    for (const auto& p : sample_points(m, 3)) {
      const auto c = curvature_at(m, p);
      const int D = m.coord_dim();
      double r = 0.0;
      for (int e = 0; e < D; ++e)
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b)
            for (int cc = 0; cc < D; ++cc)
              for (int d = 0; d < D; ++d)
                r = std::max(r, std::abs(c.nabla_riemann(e, a, b, cc, d) +
                                         c.nabla_riemann(cc, a, b, d, e) +
                                         c.nabla_riemann(d, a, b, e, cc)));
      EXPECT_LT(r, 1e-7) << id;
    }
  }
}

TEST(Ambient, CurvatureBoundsMonotone) {
  for (const char* id : {"heisenberg3", "hypcyl3", "sphere3"}) {
    const auto m = SasakianModel::from_id(id);
    const auto K = curvature_bounds(m, 3, 1);
    ASSERT_EQ(K.size(), 4u);
    for (std::size_t i = 1; i < K.size(); ++i) EXPECT_GE(K[i], K[i - 1]) << id;
    EXPECT_GT(K[0], 0.0);
  }
  // Unit S^3: |Rm|^2 = 2 m (m-1) with m = 3 -> |Rm| = sqrt(12).
  const auto Ks = curvature_bounds(SasakianModel::from_id("sphere3"), 1, 1);
  EXPECT_NEAR(Ks[0], std::sqrt(12.0), 1e-12);
  EXPECT_NEAR(Ks[1], std::sqrt(12.0), 1e-12);
}
