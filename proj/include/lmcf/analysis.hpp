#pragma once

// Diagnostics along a trajectory, stability reports, noncollapsing estimates,
// exponential decay fits and empirical audits of the flow's a-priori bounds.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "lmcf/errors.hpp"
#include "lmcf/flow.hpp"
#include "lmcf/immersion.hpp"
#include "lmcf/laplace.hpp"

namespace lmcf {

struct Diagnostics {
  double t = 0.0;
  double vol = 0.0;
  double max_H = 0.0;
  double l2_H_sq = 0.0;  // int |H|^2 dmu
  double max_A_sq = 0.0;
  double lambda1 = 0.0;
  double osc_alpha = 0.0;
  double mean_alpha = 0.0;
  double E_t = 0.0;
  double kappa = 0.0;
  double leg_residual = 0.0;
  // not part of the CSV contract
  double max_grad_H = 0.0;
  double dt = 0.0;
  double e_integrand = 0.0;  // max(|A||H| + |H|^2) at this sample
  std::vector<double> cycle_H;
};

/// Constants of the classes A(kappa, r, Lambda, eps) and B(kappa, r, delta, Lambda, eps).
struct ThresholdSet {
  double kappa0 = 1.0;
  double r0 = 1.0;
  double Lambda0 = 10.0;
  double eps0 = 0.5;
  double delta0 = 0.5;
  double V0 = 100.0;
  void validate() const {
    for (double v : {kappa0, r0, Lambda0, eps0, delta0, V0})
      if (!(v > 0.0)) throw SchemaError("threshold constants must be positive");
  }
};

/// Per-node |grad H| with grad_i H_j = d_i H_j - G^k_ij H_k.
inline VectorXd grad_H_norm(const DiscreteLegendrian& L, const SecondFundamentalData& s) {
  const int n = L.n();
  const int N = L.nodes();
  const MatrixXd G = induced_christoffels(L);
  std::vector<MatrixXd> dH(n, MatrixXd(n, N));  // dH[i](j,x) = d_i H_j
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dH[i].row(j) = L.diff().diff(s.H.row(j).transpose(), i).transpose();
  VectorXd out(N);
  for (int x = 0; x < N; ++x) {
    double nab[2][2];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = dH[i](j, x);
        for (int k = 0; k < n; ++k) v -= G((k * n + i) * n + j, x) * s.H(k, x);
        nab[i][j] = v;
      }
    double q = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            q += L.first().ginv(i * n + k, x) * L.first().ginv(j * n + l, x) * nab[i][j] * nab[k][l];
    out(x) = std::sqrt(std::max(0.0, q));
  }
  return out;
}

// ---- noncollapsing ----------------------------------------------------------------

namespace detail {

/// Graph-geodesic distances from a source node on the 16-neighbour stencil of a torus grid.
inline std::vector<double> torus_distances(const DiscreteLegendrian& L, int source) {
  const auto& grid = L.grid();
  const int N0 = grid.extent(0), N1 = grid.extent(1);
  const int n = 2;
  static const int offs[16][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1}, {1, 1},   {1, -1},
                                  {-1, 1}, {-1, -1}, {1, 2},  {1, -2}, {-1, 2},  {-1, -2},
                                  {2, 1},  {2, -1},  {-2, 1}, {-2, -1}};
  const double h0 = grid.spacing(0), h1 = grid.spacing(1);
  std::vector<double> dist(grid.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[source] = 0.0;
  pq.push({0.0, source});
  const auto& g = L.first().g;
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    const auto mu = grid.multi(u);
    for (const auto& o : offs) {
      const int i = ((mu[0] + o[0]) % N0 + N0) % N0;
      const int j = ((mu[1] + o[1]) % N1 + N1) % N1;
      const int v = grid.index(i, j);
      const double a = o[0] * h0, b = o[1] * h1;
      double len2 = 0.0;
      for (int node : {u, v})
        len2 += 0.5 * (g(0 * n + 0, node) * a * a + 2.0 * g(0 * n + 1, node) * a * b +
                       g(1 * n + 1, node) * b * b);
      const double nd = d + std::sqrt(len2);
      if (nd < dist[v]) {
        dist[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  return dist;
}

inline std::vector<double> radius_ladder(double r_floor, double r) {
  std::vector<double> s;
  const double top = std::max(r, r_floor);
  for (int k = 0;; ++k) {
    const double v = r_floor * std::pow(2.0, k / 4.0);
    if (v > top * (1.0 + 1e-12)) break;
    s.push_back(v);
  }
  return s;
}

}  // namespace detail

/// kappa = min over sampled centres q and radii s <= r of Vol(B(q,s)) / s^n.
/// Curves: balls are arcs, Vol(B(q,s)) = min(2s, Vol). Tori: graph-geodesic
/// balls with fractional coverage of boundary cells. Radii follow the ladder
/// r_floor 2^{k/4}, so the estimate is nonincreasing in r.
inline double noncollapsing(const DiscreteLegendrian& L, double r, int centres = 16) {
  if (!(r > 0.0)) throw SchemaError("noncollapsing radius must be positive");
  const double vol = L.first().vol;
  if (L.n() == 1) {
    const double r_floor = std::min(r, 0.25 * vol);
    double kappa = std::numeric_limits<double>::infinity();
    for (double s : detail::radius_ladder(r_floor, r)) kappa = std::min(kappa, std::min(2.0 * s, vol) / s);
    return kappa;
  }
  double cell = 0.0;
  for (int x = 0; x < L.nodes(); ++x) cell = std::max(cell, std::sqrt(L.first().dmu(x)));
  const double r_floor = 3.0 * cell;
  const auto radii = detail::radius_ladder(r_floor, r);
  const int stride = std::max(1, L.nodes() / centres);
  double kappa = std::numeric_limits<double>::infinity();
  for (int q = 0; q < L.nodes(); q += stride) {
    const auto dist = detail::torus_distances(L, q);
    for (double s : radii) {
      double area = 0.0;
      for (int x = 0; x < L.nodes(); ++x) {
        const double ell = std::sqrt(L.first().dmu(x));
        const double cover = std::clamp(0.5 + (s - dist[x]) / ell, 0.0, 1.0);
        area += cover * L.first().dmu(x);
      }
      kappa = std::min(kappa, area / (s * s));
    }
  }
  return kappa;
}

// ---- decay fit ---------------------------------------------------------------------

struct DecayFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int samples = 0;
};

inline DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& v, double t0, double t1) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 - 1e-12 || t[i] > t1 + 1e-12) continue;
    if (!(v[i] > 0.0))
      throw NonPositiveSeries("value " + std::to_string(v[i]) + " at t = " + std::to_string(t[i]));
    xs.push_back(t[i]);
    ys.push_back(std::log(v[i]));
  }
  if (xs.size() < 2) throw InsufficientData("decay fit window holds fewer than 2 samples");
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw InsufficientData("decay fit window has zero time extent");
  DecayFit f;
  f.rate = sxy / sxx;
  f.intercept = my - f.rate * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.intercept + f.rate * xs[i]);
    ss_res += e * e;
  }
  f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  f.samples = static_cast<int>(xs.size());
  return f;
}

// ---- stability ---------------------------------------------------------------------

enum class Verdict { strictly_stable, borderline, unstable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::strictly_stable: return "strictly_stable";
    case Verdict::borderline: return "borderline";
    case Verdict::unstable: return "unstable";
  }
  return "";
}

struct StabilityReport {
  double lambda1 = 0.0;
  double kplus2 = 0.0;
  Verdict verdict = Verdict::borderline;
  std::optional<double> second_variation_formula;
  std::optional<double> second_variation_fd;
  std::optional<double> relative_gap;
  std::optional<bool> essential;
  std::optional<double> eigenspace_remainder;  // ||f - P_1 f||^2 / ||f||^2
};

constexpr double kVerdictBand = 1e-6;

inline Verdict stability_verdict(double lambda1, double kplus2) {
  const double d = lambda1 - kplus2;
  if (d > kVerdictBand) return Verdict::strictly_stable;
  if (d < -kVerdictBand) return Verdict::unstable;
  return Verdict::borderline;
}

/// lambda_1 verdict and, when f is given on a minimal L, the second variation of
/// volume along the Legendrian variation generated by f by the spectral formula
/// sum a_i^2 lambda_i (lambda_i - (K+2)) and by a centred difference of Vol.
inline StabilityReport stability_report(const DiscreteLegendrian& L, const std::optional<VectorXd>& f = {},
                                        double fd_step = 1e-3) {
  StabilityReport rep;
  rep.kplus2 = L.model().eta_einstein_constant();
  const int k = f ? L.nodes() - 1 : 1;
  const SpectralReport sp = spectrum(L, k);
  rep.lambda1 = sp.lambda1();
  rep.verdict = stability_verdict(rep.lambda1, rep.kplus2);
  if (!f) return rep;
  const auto sff = second_fundamental(L);
  if (sff.max_H() >= 1e-5)
    throw NotMinimal("max|H| = " + std::to_string(sff.max_H()) + " >= 1e-5: second variation needs a minimal L");
  const VectorXd& fv = *f;
  const VectorXd Mf = L.first().dmu.cwiseProduct(fv);
  double sum = 0.0, p1 = 0.0;
  for (int i = 1; i <= k; ++i) {
    const double lam = sp.eigenvalues[i];
    const double a = sp.eigenfunctions.col(i).dot(Mf);
    sum += a * a * lam * (lam - rep.kplus2);
    if (std::abs(lam - rep.lambda1) <= 1e-6 * std::max(1.0, rep.lambda1)) p1 += a * a;
  }
  rep.second_variation_formula = sum;
  const double norm2 = fv.dot(Mf);
  // constants are not variations of the Legendrian, they are Reeb translations
  const double a0 = sp.eigenfunctions.col(0).dot(Mf);
  const double remainder = norm2 > 0 ? (norm2 - a0 * a0 - p1) / norm2 : 0.0;
  rep.eigenspace_remainder = std::max(0.0, remainder);
  rep.essential = *rep.eigenspace_remainder >= 1e-6;
  const double vp = legendrian_deform(L, fv, fd_step).first().vol;
  const double vm = legendrian_deform(L, fv, -fd_step).first().vol;
  rep.second_variation_fd = (vp - 2.0 * L.first().vol + vm) / (fd_step * fd_step);
  const double scale = std::max(std::abs(sum), 1e-12);
  rep.relative_gap = std::abs(sum - *rep.second_variation_fd) / scale;
  return rep;
}

// ---- membership in the threshold classes -----------------------------------------

/// L in A(kappa, r, Lambda, eps): kappa-noncollapsed on scale r, |A| <= Lambda, |H| <= eps.
inline bool in_class_A(const Diagnostics& d, const ThresholdSet& th) {
  th.validate();
  return d.kappa >= th.kappa0 && std::sqrt(d.max_A_sq) <= th.Lambda0 && d.max_H <= th.eps0;
}

/// L in B(kappa, r, delta, Lambda, eps): class A plus lambda_1 >= K+2+delta.
inline bool in_class_B(const Diagnostics& d, const ThresholdSet& th, double kplus2) {
  return in_class_A(d, th) && d.lambda1 >= kplus2 + th.delta0;
}

// ---- diagnostics -------------------------------------------------------------------

/// Diagnostics of a state. lambda1 and kappa may be supplied (held between recomputes);
/// E(t) is accumulated from the previous sample by the trapezoid rule.
inline Diagnostics diagnostics(const FlowState& s, const Diagnostics* prev, std::optional<double> lambda1,
                               std::optional<double> kappa, double r0 = 1.0) {
  const auto& L = s.L;
  Diagnostics d;
  d.t = s.t;
  d.vol = L.first().vol;
  d.max_H = s.sff.max_H();
  d.l2_H_sq = L.integrate(s.sff.H_sq);
  d.max_A_sq = s.sff.max_A_sq;
  d.lambda1 = lambda1 ? *lambda1 : lmcf::lambda1(L);
  d.osc_alpha = s.alpha.maxCoeff() - s.alpha.minCoeff();
  d.mean_alpha = L.integrate(s.alpha) / d.vol;
  d.kappa = kappa ? *kappa : noncollapsing(L, r0);
  d.leg_residual = L.first().legendrian_residual;
  d.max_grad_H = grad_H_norm(L, s.sff).maxCoeff();
  d.dt = s.last.dt;
  d.cycle_H = cycle_integrals(L.grid(), s.sff.H);
  double integrand = 0.0;
  for (int x = 0; x < L.nodes(); ++x)
    integrand = std::max(integrand, std::sqrt(s.sff.A_sq(x) * s.sff.H_sq(x)) + s.sff.H_sq(x));
  d.e_integrand = integrand;
  if (prev) d.E_t = prev->E_t + 0.5 * (d.t - prev->t) * (prev->e_integrand + integrand);
  return d;
}

// ---- structural invariants ---------------------------------------------------------

struct InvariantReport {
  double worst_volume_increase = 0.0;  // max over steps of Vol(t_{k+1}) - Vol(t_k)
  double max_leg_residual = 0.0;
  double worst_cycle_drift = 0.0;      // max |C(t) - C(0)| / t over fundamental cycles
  double cycle_allowance = 0.0;        // 10 dt
  bool volume_monotone = true;
  bool legendrian = true;
  bool cycles_constant = true;
  bool pass() const { return volume_monotone && legendrian && cycles_constant; }
};

/// Checks along a recorded trajectory: Vol nonincreasing up to 1e-10 per step,
/// Legendrian residual below leg_tol, cycle integrals of H drifting by at
/// most 10 dt per unit time.
inline InvariantReport structural_invariants(const std::vector<Diagnostics>& tr, double leg_tol = 1e-7) {
  InvariantReport rep;
  if (tr.empty()) return rep;
  double dt = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    rep.max_leg_residual = std::max(rep.max_leg_residual, tr[k].leg_residual);
    if (k == 0) continue;
    dt = std::max(dt, tr[k].t - tr[k - 1].t);
    rep.worst_volume_increase = std::max(rep.worst_volume_increase, tr[k].vol - tr[k - 1].vol);
    const double t = tr[k].t - tr.front().t;
    for (std::size_t c = 0; c < tr[k].cycle_H.size() && c < tr.front().cycle_H.size(); ++c)
      rep.worst_cycle_drift =
          std::max(rep.worst_cycle_drift, std::abs(tr[k].cycle_H[c] - tr.front().cycle_H[c]) / t);
  }
  rep.cycle_allowance = 10.0 * dt;
  rep.volume_monotone = rep.worst_volume_increase <= 1e-10;
  rep.legendrian = rep.max_leg_residual < leg_tol;
  rep.cycles_constant = rep.worst_cycle_drift <= rep.cycle_allowance;
  return rep;
}

// ---- bound audits ------------------------------------------------------------------

/// Constants of the run needed by the auditors.
struct AuditContext {
  double kplus2 = 0.0;
  int n = 1;
  double K0 = 0.0;  // sup |Rm|
  double K1 = 0.0;  // sup |Rm| + sup |grad Rm|
  double r0 = 1.0;
};

struct AuditItem {
  std::string name;
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();  // >= 0 means satisfied
  double worst_t = 0.0;
  int checked = 0;
  std::string note;
};

namespace detail {

/// Records "lhs <= rhs" with slack (0.05 + 10 dt)|rhs| plus an absolute floor.
inline void audit_le(AuditItem& item, double t, double lhs, double rhs, double dt, double floor) {
  const double margin = rhs + (0.05 + 10.0 * dt) * std::abs(rhs) + floor - lhs;
  ++item.checked;
  if (margin < item.worst_margin) {
    item.worst_margin = margin;
    item.worst_t = t;
  }
  if (!(margin >= 0.0)) item.pass = false;
}

}  // namespace detail

/// Empirical audit of the a-priori inequalities along a recorded trajectory.
/// d/dt int|H|^2 is a centred difference of the recorded series.
inline std::vector<AuditItem> bound_audit(const std::vector<Diagnostics>& tr, const AuditContext& ctx) {
  if (tr.size() < 10) throw InsufficientData("bound audit needs at least 10 samples");
  const int n = ctx.n;
  std::vector<AuditItem> out;
  double maxI = 0.0;
  for (const auto& d : tr) maxI = std::max(maxI, d.l2_H_sq);
  const double floorI = 1e-10 * maxI + 1e-20;

  // growth and decay of int|H|^2 between consecutive samples
  AuditItem growth{"H_energy_growth"}, decay{"H_energy_decay"};
  double Lam = 0.0, eps = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    Lam = std::max(Lam, std::sqrt(tr[k].max_A_sq));
    eps = std::max(eps, tr[k].max_H);
    if (k == 0 || k + 1 == tr.size()) continue;
    const double dI = (tr[k + 1].l2_H_sq - tr[k - 1].l2_H_sq) / (tr[k + 1].t - tr[k - 1].t);
    const double I = tr[k].l2_H_sq;
    const double dt = tr[k + 1].t - tr[k].t;
    detail::audit_le(growth, tr[k].t, dI, 2.0 * (ctx.kplus2 + Lam * eps) * I, dt, floorI);
    detail::audit_le(decay, tr[k].t, dI, -2.0 * (tr[k].lambda1 - ctx.kplus2 - Lam * eps) * I, dt, floorI);
  }
  out.push_back(growth);
  out.push_back(decay);

  // eigenvalue lower bound under exponential decay of |H| + |grad H|
  {
    AuditItem drift{"eigenvalue_drift_bound"};
    std::vector<double> ts, ms;
    double LamA = 0.0;
    for (const auto& d : tr) {
      ts.push_back(d.t);
      ms.push_back(d.max_H + d.max_grad_H);
      LamA = std::max(LamA, std::sqrt(d.max_A_sq));
    }
    bool positive = std::all_of(ms.begin(), ms.end(), [](double v) { return v > 0.0; });
    double rate = 0.0;
    if (positive) rate = decay_fit(ts, ms, ts.front(), ts.back()).rate;
    // a constant series fits to a roundoff-sized rate of either sign
    if (!positive || rate > -1e-9) {
      drift.note = "no exponential decay of |H|+|grad H|; hypothesis not met, bound not applicable";
    } else {
      const double gamma = 0.9 * (-rate);
      double e = 0.0;
      for (std::size_t k = 0; k < tr.size(); ++k) e = std::max(e, ms[k] * std::exp(gamma * ts[k]));
      const double l0 = std::sqrt(std::max(0.0, tr.front().lambda1));
      const double bound = std::exp(-(2.0 * LamA * e + e * e) / (2.0 * gamma)) * l0 - LamA * e / gamma;
      for (std::size_t k = 0; k < tr.size(); ++k) {
        const double dt = k + 1 < tr.size() ? tr[k + 1].t - tr[k].t : tr[k].dt;
        // sqrt(lambda_1(t)) >= bound  <=>  -sqrt(lambda_1) <= -bound
        detail::audit_le(drift, tr[k].t, -std::sqrt(std::max(0.0, tr[k].lambda1)), -bound, dt, 0.0);
      }
      drift.note = "gamma = " + std::to_string(gamma) + ", eps = " + std::to_string(e);
    }
    out.push_back(drift);
  }

  // noncollapsing: kappa(t) >= kappa_0 exp(-(n+1) E(t))
  {
    AuditItem nc{"noncollapsing_lower_bound"};
    const double k0 = tr.front().kappa;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const double dt = k + 1 < tr.size() ? tr[k + 1].t - tr[k].t : tr[k].dt;
      const double rhs = k0 * std::exp(-(n + 1) * tr[k].E_t);
      detail::audit_le(nc, tr[k].t, -tr[k].kappa, -rhs, dt, 0.0);
    }
    out.push_back(nc);
  }

  // sup estimate with S = H: max|H| <= (1/sqrt(kappa) + max|grad H|) (int|H|^2)^{1/(n+2)} when int|H|^2 <= r^{n+2}
  {
    AuditItem sup{"H_sup_estimate"};
    const double cap = std::pow(ctx.r0, n + 2);
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const auto& d = tr[k];
      if (d.l2_H_sq > cap) continue;
      const double dt = k + 1 < tr.size() ? tr[k + 1].t - tr[k].t : d.dt;
      const double rhs = (1.0 / std::sqrt(d.kappa) + d.max_grad_H) * std::pow(d.l2_H_sq, 1.0 / (n + 2));
      detail::audit_le(sup, d.t, d.max_H, rhs, dt, 1e-14);
    }
    sup.note = "Lambda taken as the measured max|grad H| at each sample";
    out.push_back(sup);
  }

  // doubling time for |A| and |H| with c1 = 1, c2 = K0, c3 = K1
  {
    AuditItem dbl{"curvature_doubling"};
    const double Lam0 = std::sqrt(tr.front().max_A_sq);
    const double eps0 = tr.front().max_H;
    const double den = 8.0 * Lam0 * Lam0 * Lam0 + 2.0 * ctx.K0 * Lam0 + ctx.K1;
    const double T1a = den > 0 ? Lam0 / den : 0.0;
    const double T1 = std::min(T1a, std::log(2.0) / (4.0 * Lam0 * Lam0 + 2.0));
    for (std::size_t k = 0; k < tr.size() && tr[k].t <= T1 + 1e-15; ++k) {
      const double dt = k + 1 < tr.size() ? tr[k + 1].t - tr[k].t : tr[k].dt;
      detail::audit_le(dbl, tr[k].t, std::sqrt(tr[k].max_A_sq), 2.0 * Lam0, dt, 1e-14);
      detail::audit_le(dbl, tr[k].t, tr[k].max_H, 2.0 * eps0, dt, 1e-14);
    }
    dbl.note = "T1 = " + std::to_string(T1);
    out.push_back(dbl);
  }
  return out;
}

}  // namespace lmcf
