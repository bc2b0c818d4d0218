#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "lmcf/analysis.hpp"
#include "lmcf/run.hpp"

using namespace lmcf;

namespace {

constexpr double kPi = std::numbers::pi;

DiscreteLegendrian make(const std::string& model, const std::string& fam, std::vector<int> res, double s = 0.0) {
  return build_immersion(SasakianModel::from_id(model), {fam, s}, res);
}

VectorXd on_grid(const DiscreteLegendrian& L, double (*f)(double), int mode) {
  VectorXd v(L.nodes());
  for (int x = 0; x < L.nodes(); ++x) v(x) = f(mode * L.grid().theta(x, 0));
  return v;
}

/// A trajectory on which every audited inequality holds with room to spare:
/// int|H|^2 = e^{-4t}, lambda_1 = 3 against K+2 = 1, |A| = 0.1, kappa = 2.
std::vector<Diagnostics> clean_trajectory() {
  std::vector<Diagnostics> tr;
  for (int k = 0; k < 20; ++k) {
    Diagnostics d;
    d.t = 0.01 * k;
    d.dt = 0.01;
    d.vol = 2 * kPi;
    d.l2_H_sq = std::exp(-4.0 * d.t);
    d.max_H = 0.1 * std::exp(-2.0 * d.t);
    d.max_grad_H = 0.1 * std::exp(-2.0 * d.t);
    d.max_A_sq = 0.01;
    d.lambda1 = 3.0;
    d.kappa = 2.0;
    d.cycle_H = {0.0};
    tr.push_back(d);
  }
  return tr;
}

AuditContext clean_context() { return AuditContext{1.0, 1, 0.0, 0.0, 1.0}; }

std::map<std::string, AuditItem> by_name(const std::vector<AuditItem>& v) {
  std::map<std::string, AuditItem> m;
  for (const auto& a : v) m[a.name] = a;
  return m;
}

}  // namespace

TEST(DecayFit, RecoversRateIndependentOfScale) {
  std::vector<double> t, a, b;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.05 * k);
    a.push_back(std::exp(-4.0 * t.back()));
    b.push_back(7.5 * std::exp(-4.0 * t.back()));
  }
  const auto fa = decay_fit(t, a, 1.0, 3.0), fb = decay_fit(t, b, 1.0, 3.0);
  EXPECT_NEAR(fa.rate, -4.0, 1e-12);
  EXPECT_NEAR(fb.rate, -4.0, 1e-12);
  EXPECT_NEAR(fb.intercept - fa.intercept, std::log(7.5), 1e-12);
  EXPECT_NEAR(fa.r2, 1.0, 1e-12);
  EXPECT_EQ(fa.samples, 41);
}

TEST(DecayFit, Errors) {
  const std::vector<double> t{0.0, 1.0, 2.0}, v{1.0, 0.0, 0.5};
  EXPECT_THROW(decay_fit(t, v, 0.0, 2.0), NonPositiveSeries);
  EXPECT_THROW(decay_fit(t, v, 1.5, 1.6), InsufficientData);
  EXPECT_THROW(decay_fit({1.0, 1.0}, {1.0, 2.0}, 0.0, 2.0), InsufficientData);
}

TEST(Noncollapsing, CircleAndCliffordTorus) {
  // arcs: Vol(B(q,s)) = 2s for s <= r < Vol / 2
  EXPECT_NEAR(noncollapsing(make("sphere3", "great_circle", {64}), 1.0), 2.0, 1e-12);
  // flat torus with injectivity radius above 1: Vol(B) ~ pi s^2
  EXPECT_NEAR(noncollapsing(make("sphere5", "clifford_torus", {32, 32}), 1.0), kPi, 0.05 * kPi);
  EXPECT_THROW(noncollapsing(make("sphere3", "great_circle", {64}), 0.0), SchemaError);
}

TEST(Noncollapsing, NonincreasingInRadius) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {128}, 0.2);
  EXPECT_GE(noncollapsing(L, 0.5), noncollapsing(L, 1.0) - 1e-14);
  EXPECT_GE(noncollapsing(L, 1.0), noncollapsing(L, 4.0) - 1e-14);
}

TEST(Stability, GreatCircleIsUnstable) {
  const auto rep = stability_report(make("sphere3", "great_circle", {64}));
  EXPECT_NEAR(rep.lambda1, 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(rep.kplus2, 4.0);
  EXPECT_EQ(rep.verdict, Verdict::unstable);
}

TEST(Stability, HyperbolicCircleSecondVariation) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64});
  const auto rep = stability_report(L, on_grid(L, std::cos, 1));
  EXPECT_NEAR(rep.lambda1, 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(rep.kplus2, -1.0);
  EXPECT_EQ(rep.verdict, Verdict::strictly_stable);
  // ||cos||^2 lambda (lambda - (K+2)) = pi * 1 * 2
  EXPECT_NEAR(*rep.second_variation_formula, 2.0 * kPi, 1e-9);
  EXPECT_LT(*rep.relative_gap, 0.01);
  EXPECT_FALSE(*rep.essential);
}

TEST(Stability, HigherModeIsEssential) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64});
  const auto rep = stability_report(L, on_grid(L, std::cos, 2));
  EXPECT_TRUE(*rep.essential);
  // lambda = 4: pi * 4 * 5
  EXPECT_NEAR(*rep.second_variation_formula, 20.0 * kPi, 1e-8);
  EXPECT_LT(*rep.relative_gap, 0.01);
}

TEST(Stability, NeedsMinimal) {
  const auto L = make("hypcyl3", "hyperbolic_geodesic", {64}, 0.1);
  EXPECT_THROW(stability_report(L, on_grid(L, std::cos, 1)), NotMinimal);
  EXPECT_NO_THROW(stability_report(L));
}

TEST(Stability, VerdictBand) {
  EXPECT_EQ(stability_verdict(1.0, 1.0), Verdict::borderline);
  EXPECT_EQ(stability_verdict(1.0 + 1e-3, 1.0), Verdict::strictly_stable);
  EXPECT_EQ(stability_verdict(1.0 - 1e-3, 1.0), Verdict::unstable);
}

TEST(Membership, ClassesAAndB) {
  const Diagnostics d = clean_trajectory().front();
  ThresholdSet th;
  EXPECT_TRUE(in_class_A(d, th));
  EXPECT_TRUE(in_class_B(d, th, 1.0));
  EXPECT_FALSE(in_class_B(d, th, 3.0));
  Diagnostics thin = d;
  thin.kappa = 0.5;
  EXPECT_FALSE(in_class_A(thin, th));
  Diagnostics curved = d;
  curved.max_A_sq = 121.0;
  EXPECT_FALSE(in_class_A(curved, th));
  Diagnostics far = d;
  far.max_H = 0.6;
  EXPECT_FALSE(in_class_A(far, th));
}

TEST(Audit, CleanTrajectoryPassesEverything) {
  const auto items = bound_audit(clean_trajectory(), clean_context());
  ASSERT_EQ(items.size(), 6u);
  for (const auto& a : items) {
    EXPECT_TRUE(a.pass) << a.name << " margin " << a.worst_margin;
    EXPECT_GT(a.checked, 0) << a.name;
  }
}

TEST(Audit, EnergyGrowthViolation) {
  auto tr = clean_trajectory();
  for (auto& d : tr) d.l2_H_sq = std::exp(3.0 * d.t);
  auto ctx = clean_context();
  ctx.kplus2 = 0.0;
  const auto m = by_name(bound_audit(tr, ctx));
  EXPECT_FALSE(m.at("H_energy_growth").pass);
  EXPECT_FALSE(m.at("H_energy_decay").pass);
}

TEST(Audit, EnergyDecayViolation) {
  auto tr = clean_trajectory();
  for (auto& d : tr) d.l2_H_sq = std::exp(-1.0 * d.t);  // slower than -2 (lambda_1 - (K+2)) = -4
  const auto m = by_name(bound_audit(tr, clean_context()));
  EXPECT_TRUE(m.at("H_energy_growth").pass);
  EXPECT_FALSE(m.at("H_energy_decay").pass);
}

TEST(Audit, EigenvalueCollapse) {
  auto tr = clean_trajectory();
  tr.back().lambda1 = 0.5;
  EXPECT_FALSE(by_name(bound_audit(tr, clean_context())).at("eigenvalue_drift_bound").pass);
  auto flat = clean_trajectory();
  for (auto& d : flat) d.max_H = d.max_grad_H = 0.1;
  const auto a = by_name(bound_audit(flat, clean_context())).at("eigenvalue_drift_bound");
  EXPECT_TRUE(a.pass);
  EXPECT_EQ(a.checked, 0);
}

TEST(Audit, NoncollapsingViolation) {
  auto tr = clean_trajectory();
  tr[10].kappa = 1.0;  // E = 0 allows no loss
  EXPECT_FALSE(by_name(bound_audit(tr, clean_context())).at("noncollapsing_lower_bound").pass);
}

TEST(Audit, SupEstimateViolation) {
  auto tr = clean_trajectory();
  tr[5].max_H = 2.0;
  tr[5].l2_H_sq = 1e-9;
  EXPECT_FALSE(by_name(bound_audit(tr, clean_context())).at("H_sup_estimate").pass);
}

TEST(Audit, DoublingViolation) {
  auto tr = clean_trajectory();
  tr[3].max_A_sq = 0.09;  // |A| = 0.3 > 2 * 0.1 (plus slack) before T1
  EXPECT_FALSE(by_name(bound_audit(tr, clean_context())).at("curvature_doubling").pass);
}

TEST(Audit, TooShort) {
  auto tr = clean_trajectory();
  tr.resize(9);
  EXPECT_THROW(bound_audit(tr, clean_context()), InsufficientData);
}

TEST(Invariants, DetectsEachBreak) {
  EXPECT_TRUE(structural_invariants(clean_trajectory()).pass());
  auto a = clean_trajectory();
  a[4].vol += 1e-8;
  EXPECT_FALSE(structural_invariants(a).volume_monotone);
  auto b = clean_trajectory();
  b[7].leg_residual = 1e-6;
  EXPECT_FALSE(structural_invariants(b).legendrian);
  auto c = clean_trajectory();
  c[9].cycle_H = {0.01};  // drift 0.01 / 0.09 per unit time, allowance 0.1
  EXPECT_FALSE(structural_invariants(c).cycles_constant);
  c[9].cycle_H = {0.005};
  EXPECT_TRUE(structural_invariants(c).cycles_constant);
}

TEST(Golden, N64ConvergesAtTheLinearizedRate) {
  ExperimentConfig cfg;
  cfg.resolution = {64};
  const auto r = run(cfg);
  EXPECT_EQ(r.verdict, "converged");
  std::vector<double> t, I;
  for (const auto& d : r.trajectory) {
    t.push_back(d.t);
    I.push_back(d.l2_H_sq);
  }
  const auto fit = decay_fit(t, I, 1.0, 3.0);
  EXPECT_NEAR(fit.rate, -4.0, 0.05);
  EXPECT_GT(fit.r2, 0.999);
  for (const auto& a : bound_audit(r.trajectory, audit_context(cfg))) EXPECT_TRUE(a.pass) << a.name;
  EXPECT_TRUE(structural_invariants(r.trajectory).pass());
  const auto minimal = build_immersion(SasakianModel::from_id(cfg.model), {"hyperbolic_geodesic", 0.0}, {64});
  EXPECT_LT(sup_distance(r.final_state->L, minimal), 0.05);
}
