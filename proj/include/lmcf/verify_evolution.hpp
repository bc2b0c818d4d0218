#pragma once

// Consistency of recorded flow trajectories with the evolution equations.
// The time derivative of each recorded field is taken by 4th-order central
// differences over the stored snapshots and compared with the right-hand
// side evaluated at the snapshot. Time stepping is RK4, so in the smooth
// regime the residual is O(dt^4); the order is measured by a dt-halving rerun.
//
// The potential f of the deformation dF/dt = grad^k f v_k + 2 f T is f = -alpha.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lmcf/flow.hpp"
#include "lmcf/run.hpp"
#include "lmcf/verify.hpp"

namespace lmcf {

struct Snapshot {
  double t = 0.0;
  MatrixXd positions;
  VectorXd alpha;
};

struct RecordedTrajectory {
  std::optional<DiscreteLegendrian> base;  // model, grid and winding
  double dt = 0.0;
  std::vector<Snapshot> snaps;
};

/// Runs cfg (without early stop) and keeps every step.
inline RecordedTrajectory record_trajectory(ExperimentConfig cfg) {
  cfg.stop_on_convergence = false;
  RecordedTrajectory rec;
  const RunResult r = run(cfg, [&](const FlowState& s) {
    if (!rec.base) rec.base = s.L;
    rec.snaps.push_back(Snapshot{s.t, s.L.positions(), s.alpha});
  });
  rec.dt = r.dt;
  return rec;
}

/// Identifiers accepted by evolution_residuals. The *_literal variants are
/// the source statements kept as convention notes.
inline const std::vector<std::string>& evolution_ids() {
  static const std::vector<std::string> ids{"26", "V", "angle", "2", "i", "H", "21", "j", "A"};
  return ids;
}

namespace detail {

/// Time-differentiated field and its right-hand side at one snapshot,
/// both flattened to (rows x nodes).
struct EvolutionPair {
  MatrixXd lhs_field;
  MatrixXd rhs;
};

inline MatrixXd as_row(const VectorXd& v) { return v.transpose(); }

/// d/dt |A|^2 from the first variation of h under a velocity field V along L:
///   d_t h_ijk = -<grad_i grad_j V + R(V,F_i)F_j, v_k> - <grad_i F_j, (grad_V J) F_k + J grad_k V>
///   d_t g_ij  = <grad_i V, F_j> + <F_i, grad_j V>
/// with every ambient covariant derivative taken along L from spectral derivatives.
inline VectorXd variation_A_sq(const DiscreteLegendrian& L, const SecondFundamentalData& sff, const MatrixXd& V) {
  const int n = L.n();
  const int N = L.nodes();
  const int D = L.model().coord_dim();
  const auto& ff = L.first();
  std::vector<Tensor<3>> G(N);
  for (int x = 0; x < N; ++x) G[x] = L.model().christoffel_raw(L.positions().col(x));
  auto cov = [&](const MatrixXd& W, int axis) {  // grad_{F_axis} W, W ambient (D x N)
    MatrixXd out(D, N);
    for (int a = 0; a < D; ++a) out.row(a) = L.diff().diff(W.row(a).transpose(), axis).transpose();
    for (int x = 0; x < N; ++x)
      for (int a = 0; a < D; ++a) {
        double s = 0.0;
        for (int b = 0; b < D; ++b)
          for (int c = 0; c < D; ++c) s += G[x](a, b, c) * ff.tangent[axis](b, x) * W(c, x);
        out(a, x) += s;
      }
    return out;
  };
  std::vector<MatrixXd> dV(n);
  for (int j = 0; j < n; ++j) dV[j] = cov(V, j);
  std::vector<MatrixXd> ddV(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ddV[i * n + j] = cov(dV[j], i);
  std::vector<MatrixXd> dF(n * n);  // grad_i F_j
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dF[i * n + j] = cov(ff.tangent[j], i);

  VectorXd out(N);
  for (int x = 0; x < N; ++x) {
    const Frame& fr = L.frames()[x];
    const Tensor<4> R = L.model().riemann_raw(L.positions().col(x));
    const VectorXd v = V.col(x);
    // (grad_V J) Y = lambda(Y) V - g(V,Y) T
    auto gradVJ = [&](const VectorXd& Y) { return VectorXd(fr.lambda.dot(Y) * v - v.dot(fr.g * Y) * fr.reeb); };
    Eigen::Matrix2d gi = Eigen::Matrix2d::Identity();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) gi(i, j) = ff.ginv(i * n + j, x);
    std::vector<double> dh(n * n * n), dg(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const VectorXd Fi = ff.tangent[i].col(x), Fj = ff.tangent[j].col(x);
        dg[i * n + j] = dV[i].col(x).dot(fr.g * Fj) + Fi.dot(fr.g * dV[j].col(x));
        for (int k = 0; k < n; ++k) {
          const VectorXd vk = ff.normal[k].col(x);
          const VectorXd Fk = ff.tangent[k].col(x);
          double Rterm = 0.0;
          for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b)
              for (int c = 0; c < D; ++c)
                for (int d = 0; d < D; ++d) {
                  const double r = R(a, b, c, d);
                  if (r != 0.0) Rterm += r * vk(a) * Fj(b) * v(c) * Fi(d);
                }
          const VectorXd dvk = gradVJ(Fk) + fr.J * dV[k].col(x);
          dh[(i * n + j) * n + k] =
              -(ddV[i * n + j].col(x).dot(fr.g * vk) + Rterm) - dF[i * n + j].col(x).dot(fr.g * dvk);
        }
      }
    // |A|^2 = g^{ia} g^{jb} g^{kc} h_ijk h_abc
    double s = 0.0;
    auto h = [&](int i, int j, int k) { return sff.h((i * n + j) * n + k, x); };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              for (int c = 0; c < n; ++c) {
                const double ggg = gi(i, a) * gi(j, b) * gi(k, c);
                s += 2.0 * ggg * h(i, j, k) * dh[(a * n + b) * n + c];
                // d g^{ia} = -g^{ip} g^{aq} d g_pq, three slots
                double dgi = 0.0;
                for (int p = 0; p < n; ++p)
                  for (int q = 0; q < n; ++q) dgi -= gi(i, p) * gi(a, q) * dg[p * n + q];
                s += 3.0 * dgi * gi(j, b) * gi(k, c) * h(i, j, k) * h(a, b, c);
              }
    out(x) = s;
  }
  return out;
}

/// Left-hand fields and right-hand sides of every evolution equation at one state.
inline std::map<std::string, EvolutionPair> evolution_fields(const DiscreteLegendrian& L, const VectorXd& alpha) {
  const int n = L.n();
  const int N = L.nodes();
  const auto& ff = L.first();
  const double K2 = L.model().eta_einstein_constant();
  const SecondFundamentalData sff = second_fundamental(L);
  const MatrixXd Gind = induced_christoffels(L);
  std::map<std::string, EvolutionPair> out;

  auto gi = [&](int a, int b, int x) { return ff.ginv(a * n + b, x); };
  auto h = [&](int i, int j, int k, int x) { return sff.h((i * n + j) * n + k, x); };
  MatrixXd Hup = MatrixXd::Zero(n, N);
  const MatrixXd dal_up = L.gradient_coeffs(alpha);
  for (int x = 0; x < N; ++x)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) Hup(a, x) += gi(a, b, x) * sff.H(b, x);

  // flow velocity
  out["26"] = {L.positions(), velocity(L, alpha, true)};
  // volume form
  out["V"] = {as_row(ff.dmu.array().log().matrix()), as_row(-sff.H_sq)};
  // angle
  const VectorXd lap_alpha = L.laplacian(alpha);
  const VectorXd angle_rhs = lap_alpha + K2 * alpha;
  out["angle"] = {as_row(alpha), as_row(angle_rhs)};
  // metric: d g_ij = 2 grad^k f h_kij (f = -alpha) and = -2 H^k h_kij
  MatrixXd r2(n * n, N), ri(n * n, N);
  for (int x = 0; x < N; ++x)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double a2 = 0.0, ai = 0.0;
        for (int k = 0; k < n; ++k) {
          a2 += -2.0 * dal_up(k, x) * h(k, i, j, x);
          ai += -2.0 * Hup(k, x) * h(k, i, j, x);
        }
        r2(i * n + j, x) = a2;
        ri(i * n + j, x) = ai;
      }
  out["2"] = {ff.g, r2};
  out["i"] = {ff.g, ri};
  // d H = -d(Delta f + (K+2) f)
  MatrixXd r21(n, N);
  for (int a = 0; a < n; ++a) r21.row(a) = L.diff().diff(angle_rhs, a).transpose();
  out["21"] = {sff.H, r21};

  // tangential trace T_ik = g^{jl} Rbar(F_i,F_j,F_k,F_l) and the h-quadratic pieces
  const MatrixXd DH = detail::covariant_derivative(L, Gind, sff.H, 1);   // (a,j)
  const MatrixXd DDH = detail::covariant_derivative(L, Gind, DH, 2);     // (b,a,j)
  const MatrixXd Dh = detail::covariant_derivative(L, Gind, sff.h, 3);   // (l,i,j,k)
  MatrixXd rj(n, N), rj_lit(n, N);
  VectorXd rH(N), rH_lit(N), rA_lit(N), Hsq = sff.H_sq;
  const VectorXd lapHsq = L.laplacian(sff.H_sq);
  const VectorXd lapAsq = L.laplacian(sff.A_sq);
  for (int x = 0; x < N; ++x) {
    const AmbientPullback P = ambient_pullback(L, x, true);
    std::vector<double> T(n * n, 0.0), Q(n * n, 0.0), hup(n * n * n, 0.0);
    for (int m = 0; m < n; ++m)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
          for (int b = 0; b < n; ++b) hup[(m * n + j) * n + l] += gi(m, b, x) * h(b, j, l, x);
    auto up1 = [&](int m, int j, int l) { return hup[(m * n + j) * n + l]; };
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) T[i * n + k] += gi(j, l, x) * P.r(i, j, k, l);
        for (int m = 0; m < n; ++m)
          for (int a = 0; a < n; ++a) Q[i * n + k] += up1(m, i, a) * up1(a, k, m);  // h^m_ia h^a_km
      }
    double gradHsq = 0.0, THH = 0.0, QHH = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) gradHsq += gi(a, c, x) * gi(b, d, x) * DH(a * n + b, x) * DH(c * n + d, x);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        THH += T[i * n + k] * Hup(i, x) * Hup(k, x);
        QHH += Q[i * n + k] * Hup(i, x) * Hup(k, x);
      }
    rH(x) = lapHsq(x) - 2.0 * gradHsq + 2.0 * K2 * Hsq(x) - 2.0 * THH + 2.0 * QHH;
    rH_lit(x) = lapHsq(x) - 2.0 * gradHsq + 4.0 * Hsq(x) + 2.0 * QHH;
    for (int j = 0; j < n; ++j) {
      double rough = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) rough += gi(a, b, x) * DDH((a * n + b) * n + j, x);
      double corr = K2 * sff.H(j, x), lit = 2.0 * sff.H(j, x);
      for (int l = 0; l < n; ++l) {
        double Hh = 0.0;
        for (int m = 0; m < n; ++m) Hh += sff.H(m, x) * up1(m, j, l);
        corr += (-T[j * n + l] - Hh + Q[j * n + l]) * Hup(l, x);
        lit += (0.5 * (P.ric(n + l, n + j) - P.ric(l, j)) + Q[l * n + j] - Hh) * Hup(l, x);
      }
      rj(j, x) = rough + corr;
      rj_lit(j, x) = rough + lit;
    }
    // literal |A|^2 statement
    {
      auto hu3 = [&](int i, int j, int k) {  // h^{ijk}
        double s = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) s += gi(i, a, x) * gi(j, b, x) * gi(k, c, x) * h(a, b, c, x);
        return s;
      };
      auto hi_up2 = [&](int i, int m, int l) {  // h_i^{ml}
        double s = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) s += gi(m, a, x) * gi(l, b, x) * h(i, a, b, x);
        return s;
      };
      double gradAsq = 0.0;
      for (int r = 0; r < n * n * n * n; ++r)
        for (int q = 0; q < n * n * n * n; ++q) {
          const auto I = decode(r, n, 4), J = decode(q, n, 4);
          double w = 1.0;
          for (int s = 0; s < 4; ++s) w *= gi(I[s], J[s], x);
          gradAsq += w * Dh(r, x) * Dh(q, x);
        }
      double cubic = 0.0, rterm = 0.0, nab = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            const double H3 = hu3(i, j, k);
            for (int m = 0; m < n; ++m)
              for (int s = 0; s < n; ++s)
                for (int l = 0; l < n; ++l) cubic += up1(m, i, s) * up1(s, m, l) * up1(l, j, k) * H3;
            for (int m = 0; m < n; ++m)
              for (int l = 0; l < n; ++l)
                rterm += (4.0 * P.r(m, j, k, l) + P.r(n + m, n + j, k, l)) * hi_up2(i, m, l) * H3;
            nab += (P.div[(i * n + j) * n + k] - P.dJ[(i * n + j) * n + k]) * H3;
          }
      rA_lit(x) = lapAsq(x) - 2.0 * gradAsq - 2.0 * K2 * sff.A_sq(x) + 2.0 * cubic + 6.0 * Hsq(x) -
                  2.0 * rterm + nab;
    }
  }
  out["H"] = {as_row(sff.H_sq), as_row(rH)};
  out["H_literal"] = {as_row(sff.H_sq), as_row(rH_lit)};
  out["j"] = {sff.H, rj};
  out["j_literal"] = {sff.H, rj_lit};
  out["A"] = {as_row(sff.A_sq), as_row(variation_A_sq(L, sff, velocity(L, alpha, true)))};
  out["A_literal"] = {as_row(sff.A_sq), as_row(rA_lit)};
  return out;
}

inline bool is_literal(const std::string& id) { return id.size() > 8 && id.substr(id.size() - 8) == "_literal"; }

inline std::string evolution_note(const std::string& id) {
  if (id == "H") return "2(K+2)|H|^2 - 2T(H,H) with T the tangential curvature trace";
  if (id == "j") return "(K+2)H_j - T_jl H^l, intrinsic Ricci through the corrected traced Gauss";
  if (id == "A") return "first variation of h along the recorded velocity";
  if (is_literal(id)) return "convention note: source statement";
  return "";
}

}  // namespace detail

/// Residuals of the selected equations over snapshots with t in [t0, t1].
/// Literal variants of H, j and A are added automatically as notes.
inline std::vector<ResidualReport> evolution_residuals(const RecordedTrajectory& rec,
                                                       std::vector<std::string> which = evolution_ids(),
                                                       double t0 = -1e300, double t1 = 1e300) {
  const int K = static_cast<int>(rec.snaps.size());
  if (!rec.base || K < 5) throw InsufficientData("evolution residuals need at least 5 snapshots");
  for (int k = 1; k < K; ++k)
    if (std::abs(rec.snaps[k].t - rec.snaps[k - 1].t - rec.dt) > 1e-9 * rec.dt)
      throw InsufficientData("snapshots are not uniformly spaced in t");
  for (const auto& id : which)
    if (std::find(evolution_ids().begin(), evolution_ids().end(), id) == evolution_ids().end())
      throw SchemaError("unknown evolution equation '" + id + "'");
  std::vector<std::string> ids = which;
  for (const auto& id : which)
    if (id == "H" || id == "j" || id == "A") ids.push_back(id + "_literal");

  std::vector<int> centres;
  for (int k = 2; k + 2 < K; ++k)
    if (rec.snaps[k].t >= t0 - 1e-12 && rec.snaps[k].t <= t1 + 1e-12) centres.push_back(k);
  if (centres.empty()) throw InsufficientData("no interior snapshot inside the time window");
  const int kmin = centres.front() - 2, kmax = centres.back() + 2;

  std::vector<std::map<std::string, detail::EvolutionPair>> F(K);
  for (int k = kmin; k <= kmax; ++k) {
    const DiscreteLegendrian L = rec.base->with_positions(rec.snaps[k].positions);
    F[k] = detail::evolution_fields(L, rec.snaps[k].alpha);
  }
  std::vector<int> res;
  for (int a = 0; a < rec.base->grid().dims(); ++a) res.push_back(rec.base->grid().extent(a));
  std::vector<ResidualReport> out;
  for (const auto& id : ids) {
    detail::Accum acc;
    for (int k : centres) {
      const MatrixXd d = (F[k - 2].at(id).lhs_field - 8.0 * F[k - 1].at(id).lhs_field +
                          8.0 * F[k + 1].at(id).lhs_field - F[k + 2].at(id).lhs_field) /
                         (12.0 * rec.dt);
      const MatrixXd diff = d - F[k].at(id).rhs;
      for (Eigen::Index q = 0; q < diff.size(); ++q) acc.add(diff.data()[q]);
    }
    ResidualReport r;
    r.id = id;
    r.max_residual = acc.max;
    r.mean_residual = acc.mean();
    r.resolution = res;
    r.expected_order = 4.0;
    r.threshold = 1e-6;
    r.informational = detail::is_literal(id);
    r.pass = r.informational || acc.max < r.threshold;
    r.note = detail::evolution_note(id);
    out.push_back(r);
  }
  return out;
}

/// dt-halving study: records cfg up to t_end at dt0 and dt0/2 and compares
/// the residuals over the common window [2 dt0, t_end - 2 dt0]. The reports of
/// the finer run carry the measured order log2(coarse / fine). A gating
/// equation passes if the order lies in [3.5, 4.5] or the fine residual is
/// below the 1e-10 floor.
inline std::vector<ResidualReport> evolution_order_study(ExperimentConfig cfg, double t_end, double dt0,
                                                         const std::vector<std::string>& which = evolution_ids()) {
  if (!(dt0 > 0.0) || t_end < 8.0 * dt0) throw InsufficientData("order study needs t_end >= 8 dt0");
  cfg.t_max = t_end;
  cfg.spectral_every = std::numeric_limits<int>::max();
  const double ta = 2.0 * dt0, tb = t_end - 2.0 * dt0;
  cfg.dt = dt0;
  const auto coarse = evolution_residuals(record_trajectory(cfg), which, ta, tb);
  cfg.dt = 0.5 * dt0;
  auto fine = evolution_residuals(record_trajectory(cfg), which, ta, tb);
  for (std::size_t q = 0; q < fine.size(); ++q) {
    ResidualReport& r = fine[q];
    r.measured_order = std::log2(coarse[q].max_residual / r.max_residual);
    const bool order_ok = r.measured_order >= 3.5 && r.measured_order <= 4.5;
    r.pass = r.informational || order_ok || r.max_residual < 1e-10;
    if (std::abs(r.measured_order) < 1.0)
      r.note += (r.note.empty() ? "" : "; ") + std::string("no dt dependence, a spatial or roundoff floor dominates");
  }
  return fine;
}

}  // namespace lmcf
