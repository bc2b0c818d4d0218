#pragma once

// Residual harness for the submanifold identities of a discrete Legendrian:
// Gauss, Codazzi, traced Gauss, the Simons-type identity for grad grad H,
// total symmetry of h and lambda(A) = 0.
//
// The two sides of each identity come from separate code paths. Intrinsic
// curvature is built only from g_ij (spectral derivatives of the induced
// metric); the other side uses the ambient closed-form curvature pulled back
// along F_i and v_k = J F_k.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lmcf/ambient.hpp"
#include "lmcf/immersion.hpp"

namespace lmcf {

struct ResidualReport {
  std::string id;
  double max_residual = 0.0;
  double mean_residual = 0.0;
  std::vector<int> resolution;
  double expected_order = 0.0;  // 0: spectral in space; otherwise the time order
  double measured_order = std::numeric_limits<double>::quiet_NaN();
  double threshold = 0.0;
  bool pass = false;
  bool informational = false;   // convention notes never gate
  std::string note;
};

namespace detail {

inline int ipow_int(int b, int e) {
  int r = 1;
  while (e-- > 0) r *= b;
  return r;
}

/// Decodes a flat row index of a rank-r tensor on n dims (first index slowest).
inline std::vector<int> decode(int row, int n, int rank) {
  std::vector<int> idx(rank);
  for (int s = rank - 1; s >= 0; --s) {
    idx[s] = row % n;
    row /= n;
  }
  return idx;
}

inline int encode(const std::vector<int>& idx, int n) {
  int r = 0;
  for (int i : idx) r = r * n + i;
  return r;
}

/// Covariant derivative of a covariant tensor field stored as (n^rank x nodes);
/// the derivative index becomes the first slot of the result.
inline MatrixXd covariant_derivative(const DiscreteLegendrian& L, const MatrixXd& Gind, const MatrixXd& T,
                                     int rank) {
  const int n = L.n();
  const int N = L.nodes();
  const int rows = ipow_int(n, rank);
  MatrixXd out(rows * n, N);
  for (int l = 0; l < n; ++l)
    for (int r = 0; r < rows; ++r) {
      VectorXd d = L.diff().diff(T.row(r).transpose(), l);
      const std::vector<int> I = decode(r, n, rank);
      for (int slot = 0; slot < rank; ++slot)
        for (int m = 0; m < n; ++m) {
          std::vector<int> J = I;
          J[slot] = m;
          const int rj = encode(J, n);
          const int gr = (m * n + l) * n + I[slot];
          for (int x = 0; x < N; ++x) d(x) -= Gind(gr, x) * T(rj, x);
        }
      out.row(l * rows + r) = d.transpose();
    }
  return out;
}

/// Intrinsic R_abcd of the induced metric, same convention as the ambient
/// curvature: R^a_bcd = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb.
inline MatrixXd intrinsic_riemann(const DiscreteLegendrian& L, const MatrixXd& Gind) {
  const int n = L.n();
  const int N = L.nodes();
  std::vector<MatrixXd> dG(n, MatrixXd(n * n * n, N));
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n * n * n; ++r) dG[c].row(r) = L.diff().diff(Gind.row(r).transpose(), c).transpose();
  auto G = [&](int a, int b, int c, int x) { return Gind((a * n + b) * n + c, x); };
  MatrixXd Rlow = MatrixXd::Zero(n * n * n * n, N);
  for (int x = 0; x < N; ++x) {
    std::vector<double> Rup(n * n * n * n, 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            double v = dG[c]((a * n + d) * n + b, x) - dG[d]((a * n + c) * n + b, x);
            for (int e = 0; e < n; ++e) v += G(a, c, e, x) * G(e, d, b, x) - G(a, d, e, x) * G(e, c, b, x);
            Rup[((a * n + b) * n + c) * n + d] = v;
          }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            double v = 0.0;
            for (int e = 0; e < n; ++e) v += L.first().g(a * n + e, x) * Rup[((e * n + b) * n + c) * n + d];
            Rlow(((a * n + b) * n + c) * n + d, x) = v;
          }
  }
  return Rlow;
}

/// Ambient curvature pulled back to the frame E = (F_1..F_n, v_1..v_n, T) at one node.
struct AmbientPullback {
  int n = 0;
  int m = 0;                // 2n + 1
  std::vector<double> R;    // R(E_p,E_q,E_r,E_s)
  std::vector<double> dR;   // (nabla_{F_a} R)(E_p,E_q,E_r,E_s), leading index a < n
  std::vector<double> Ric;  // Ric(E_p,E_q)
  std::vector<double> dJ;   // J^b_e nabla_s R^e_{dcb} F_i^s F_j^d F_k^c, extent n
  std::vector<double> div;  // nabla^e R_{edbc} F_i^d v_j^b F_k^c
  double r(int p, int q, int s, int t) const { return R[((p * m + q) * m + s) * m + t]; }
  double dr(int a, int p, int q, int s, int t) const { return dR[(((a * m + p) * m + q) * m + s) * m + t]; }
  double ric(int p, int q) const { return Ric[p * m + q]; }
};

/// Full contraction of a rank-4 tensor with a list of vectors in every slot.
inline std::vector<double> pull4(const std::vector<double>& R, int D, const std::vector<VectorXd>& E) {
  const int m = static_cast<int>(E.size());
  MatrixXd B(D, m);
  for (int q = 0; q < m; ++q) B.col(q) = E[q];
  // successive mode products; each step contracts the leading slot and
  // rotates it to the back
  std::vector<double> cur = R;
  std::vector<int> ext{D, D, D, D};
  for (int step = 0; step < 4; ++step) {
    const int rest = ext[1] * ext[2] * ext[3];
    std::vector<double> nxt(static_cast<std::size_t>(rest) * m, 0.0);
    for (int a = 0; a < ext[0]; ++a)
      for (int r = 0; r < rest; ++r) {
        const double v = cur[a * rest + r];
        if (v == 0.0) continue;
        for (int q = 0; q < m; ++q) nxt[r * m + q] += B(a, q) * v;
      }
    cur.swap(nxt);
    ext = {ext[1], ext[2], ext[3], m};
  }
  return cur;
}

inline AmbientPullback ambient_pullback(const DiscreteLegendrian& L, int x, bool with_nabla) {
  const SasakianModel& model = L.model();
  const int n = L.n();
  const int m = 2 * n + 1;
  const int D = model.coord_dim();
  const VectorXd p = L.positions().col(x);
  const Frame& fr = L.frames()[x];
  std::vector<VectorXd> E(m);
  for (int i = 0; i < n; ++i) {
    E[i] = L.first().tangent[i].col(x);
    E[n + i] = L.first().normal[i].col(x);
  }
  E[2 * n] = fr.reeb;
  AmbientPullback out;
  out.n = n;
  out.m = m;
  const Tensor<4> R = model.riemann_raw(p);
  out.R = pull4(R.data(), D, E);
  const MatrixXd ric = ricci_from(R, fr.ginv);
  out.Ric.assign(m * m, 0.0);
  for (int q = 0; q < m; ++q)
    for (int r = 0; r < m; ++r) out.Ric[q * m + r] = E[q].dot(ric * E[r]);

  const int m4 = m * m * m * m;
  out.dR.assign(static_cast<std::size_t>(n) * m4, 0.0);
  out.dJ.assign(n * n * n, 0.0);
  out.div.assign(n * n * n, 0.0);
  if (!with_nabla || model.embedded()) return out;
  const Tensor<5> dR = model.nabla_riemann_raw(p);
  const int D4 = D * D * D * D;
  for (int a = 0; a < n; ++a) {
    std::vector<double> Ra(D4, 0.0);
    for (int s = 0; s < D; ++s) {
      const double Fs = E[a](s);
      if (Fs == 0.0) continue;
      for (int q = 0; q < D4; ++q) Ra[q] += Fs * dR.data()[static_cast<std::size_t>(s) * D4 + q];
    }
    const std::vector<double> pa = pull4(Ra, D, E);
    std::copy(pa.begin(), pa.end(), out.dR.begin() + static_cast<std::ptrdiff_t>(a) * m4);
  }
  const MatrixXd Jg = fr.J * fr.ginv;  // (b, mu) = J^b_e g^{e mu}
  for (int i = 0; i < n; ++i) {
    // Z(d,c) = sum_{mu,b} Jg(b,mu) F_i^s nabla_s R_{mu d c b}
    MatrixXd Z = MatrixXd::Zero(D, D);
    for (int s = 0; s < D; ++s) {
      const double Fs = E[i](s);
      if (Fs == 0.0) continue;
      for (int mu = 0; mu < D; ++mu)
        for (int d = 0; d < D; ++d)
          for (int c = 0; c < D; ++c)
            for (int b = 0; b < D; ++b) Z(d, c) += Fs * Jg(b, mu) * dR(s, mu, d, c, b);
    }
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) out.dJ[(i * n + j) * n + k] = E[j].dot(Z * E[k]);
  }
  // Div(d,b,c) = g^{e s} nabla_s R_{e d b c}
  std::vector<double> dv(D * D * D, 0.0);
  for (int s = 0; s < D; ++s)
    for (int e = 0; e < D; ++e) {
      const double gi = fr.ginv(e, s);
      if (gi == 0.0) continue;
      for (int d = 0; d < D; ++d)
        for (int b = 0; b < D; ++b)
          for (int c = 0; c < D; ++c) dv[(d * D + b) * D + c] += gi * dR(s, e, d, b, c);
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int d = 0; d < D; ++d)
          for (int b = 0; b < D; ++b)
            for (int c = 0; c < D; ++c) v += dv[(d * D + b) * D + c] * E[i](d) * E[n + j](b) * E[k](c);
        out.div[(i * n + j) * n + k] = v;
      }
  return out;
}

struct Accum {
  double max = 0.0, sum = 0.0;
  long count = 0;
  void add(double v) {
    v = std::abs(v);
    if (!(v == v)) v = std::numeric_limits<double>::infinity();
    max = std::max(max, v);
    sum += v;
    ++count;
  }
  double mean() const { return count ? sum / double(count) : 0.0; }
};

/// Thresholds for the spatial identities: curves are resolved to roundoff,
/// tori carry more derivatives on a 2D grid.
inline double identity_threshold(const std::string& id, int n) {
  if (n == 1) return 1e-8;
  if (id == "simons") return 1e-4;
  if (id == "h_symmetry" || id == "reeb_A") return 1e-8;
  if (id == "simons_n1_crosscheck") return 1e-10;
  return 1e-5;
}

}  // namespace detail

/// All tensor pieces of the identities at every node. Exposed so tests can
/// inspect individual terms.
struct SubmanifoldTerms {
  MatrixXd Rint;     // intrinsic R_ijkl
  MatrixXd gauss_rhs;
  MatrixXd codazzi_lhs, codazzi_rhs;  // rows (l,j,i,k)
  MatrixXd ric_int, traced_rhs, traced_literal_rhs;  // rows (i,k)
  MatrixXd simons_lhs;                // grad_i grad_j H_k, rows (i,j,k)
  MatrixXd simons_rhs;                // derived expansion
  MatrixXd simons_literal_rhs;        // source term grouping
  VectorXd simons_n1;                 // hand reduction of the literal form (n = 1 only)
};

inline SubmanifoldTerms submanifold_terms(const DiscreteLegendrian& L, const SecondFundamentalData& sff) {
  const int n = L.n();
  const int N = L.nodes();
  const int m = 2 * n;
  const auto& ff = L.first();
  const MatrixXd Gind = induced_christoffels(L);
  SubmanifoldTerms t;
  t.Rint = detail::intrinsic_riemann(L, Gind);

  const MatrixXd Dh = detail::covariant_derivative(L, Gind, sff.h, 3);    // (l,i,j,k)
  const MatrixXd DDh = detail::covariant_derivative(L, Gind, Dh, 4);      // (a,l,i,j,k)
  const MatrixXd DH = detail::covariant_derivative(L, Gind, sff.H, 1);    // (j,k)
  const MatrixXd DDH = detail::covariant_derivative(L, Gind, DH, 2);      // (i,j,k)

  t.gauss_rhs = MatrixXd::Zero(n * n * n * n, N);
  t.codazzi_lhs = MatrixXd::Zero(n * n * n * n, N);
  t.codazzi_rhs = MatrixXd::Zero(n * n * n * n, N);
  t.ric_int = MatrixXd::Zero(n * n, N);
  t.traced_rhs = MatrixXd::Zero(n * n, N);
  t.traced_literal_rhs = MatrixXd::Zero(n * n, N);
  t.simons_lhs = DDH;
  t.simons_rhs = MatrixXd::Zero(n * n * n, N);
  t.simons_literal_rhs = MatrixXd::Zero(n * n * n, N);
  if (n == 1) t.simons_n1 = VectorXd::Zero(N);

  for (int x = 0; x < N; ++x) {
    const detail::AmbientPullback P = detail::ambient_pullback(L, x, true);
    auto gi = [&](int a, int b) { return ff.ginv(a * n + b, x); };
    auto h = [&](int i, int j, int k) { return sff.h((i * n + j) * n + k, x); };
    // h^m_{jl} (first index raised) and h_j^{ml} (last two raised)
    std::vector<double> hu1(n * n * n, 0.0), hu2(n * n * n, 0.0), Hup(n, 0.0);
    for (int a = 0; a < n; ++a)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
          for (int b = 0; b < n; ++b) hu1[(a * n + j) * n + l] += gi(a, b) * h(b, j, l);
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d) hu2[(j * n + a) * n + b] += gi(a, c) * gi(b, d) * h(j, c, d);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) Hup[a] += gi(a, b) * sff.H(b, x);
    auto up1 = [&](int a, int j, int l) { return hu1[(a * n + j) * n + l]; };
    auto up2 = [&](int j, int a, int b) { return hu2[(j * n + a) * n + b]; };
    auto F = [](int i) { return i; };
    auto v = [n](int i) { return n + i; };

    // Gauss: R_ijkl = Rbar(F_i,F_j,F_k,F_l) + h^m_ik h_mjl - h^m_il h_mjk
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double val = P.r(F(i), F(j), F(k), F(l));
            for (int a = 0; a < n; ++a) val += up1(a, i, k) * h(a, j, l) - up1(a, i, l) * h(a, j, k);
            t.gauss_rhs(((i * n + j) * n + k) * n + l, x) = val;
          }
    // Codazzi: nabla_l h_ijk - nabla_j h_ilk = -Rbar(v_i, F_k, F_l, F_j)
    for (int l = 0; l < n; ++l)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < n; ++k) {
            const int row = ((l * n + j) * n + i) * n + k;
            t.codazzi_lhs(row, x) = Dh(((l * n + i) * n + j) * n + k, x) - Dh(((j * n + i) * n + l) * n + k, x);
            t.codazzi_rhs(row, x) = -P.r(v(i), F(k), F(l), F(j));
          }
    // traced Gauss. Tangential trace T_ik = g^{jl} Rbar(F_i,F_j,F_k,F_l) in the
    // corrected form; the literal form uses the full ambient Ricci.
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double ric = 0.0, T = 0.0, quad = 0.0;
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            ric += gi(j, l) * t.Rint(((i * n + j) * n + k) * n + l, x);
            T += gi(j, l) * P.r(F(i), F(j), F(k), F(l));
          }
        for (int a = 0; a < n; ++a) {
          quad += sff.H(a, x) * up1(a, i, k);
          for (int l = 0; l < n; ++l) quad -= up1(a, i, l) * up1(l, k, a);
        }
        t.ric_int(i * n + k, x) = ric;
        t.traced_rhs(i * n + k, x) = T + quad;
        t.traced_literal_rhs(i * n + k, x) = P.ric(F(i), F(k)) + quad;
      }
    // Simons-type identity, term grouping as in the source
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double lap = 0.0;
          for (int a = 0; a < n; ++a)
            for (int l = 0; l < n; ++l) lap += gi(a, l) * DDh((((a * n + l) * n + i) * n + j) * n + k, x);
          double cub = 0.0;
          for (int m_ = 0; m_ < n; ++m_)
            for (int l = 0; l < n; ++l)
              for (int s = 0; s < n; ++s) {
                cub += (up1(s, m_, k) * up1(l, i, s) - up1(s, m_, i) * up1(l, k, s)) * up1(m_, j, l);
                cub += (up1(s, m_, j) * up1(l, i, s) - up1(s, m_, i) * up1(l, j, s)) * up1(m_, k, l);
                cub += up1(m_, i, s) * up1(s, m_, l) * up1(l, j, k);
              }
          for (int m_ = 0; m_ < n; ++m_)
            for (int l = 0; l < n; ++l) cub -= sff.H(m_, x) * up1(m_, i, l) * up1(l, j, k);
          double ricterm = 0.0;
          for (int l = 0; l < n; ++l) ricterm -= P.ric(F(i), F(l)) * up1(l, j, k);
          for (int s = 0; s < n; ++s)
            ricterm += 0.5 * (P.ric(F(k), F(s)) * up1(s, i, j) - P.ric(v(s), v(j)) * up1(s, i, k));
          double rm1 = 0.0;
          for (int l = 0; l < n; ++l)
            for (int m_ = 0; m_ < n; ++m_)
              rm1 -= P.r(F(l), F(k), F(i), F(m_)) * up2(j, m_, l) + P.r(F(l), F(j), F(i), F(m_)) * up2(k, m_, l);
          for (int s = 0; s < n; ++s)
            for (int l = 0; l < n; ++l)
              rm1 -= (P.r(F(s), F(k), F(j), F(l)) - P.r(v(l), F(k), F(j), v(s))) * up2(i, s, l);
          double rm2 = 0.0;
          for (int s = 0; s < n; ++s)
            for (int l = 0; l < n; ++l) {
              rm2 -= P.r(F(s), F(k), F(i), F(l)) * up2(j, s, l) - P.r(v(j), v(s), F(i), F(l)) * up2(k, s, l);
              rm2 += P.r(v(j), F(k), v(s), F(l)) * up2(i, s, l);
            }
          for (int s = 0; s < n; ++s) rm2 += P.r(v(j), F(k), F(i), v(s)) * Hup[s];
          const double nab = -0.5 * P.dJ[(i * n + j) * n + k] + 0.5 * P.div[(i * n + j) * n + k];
          t.simons_literal_rhs((i * n + j) * n + k, x) = lap + cub + ricterm + rm1 + rm2 + nab;
        }
    // Derived form. Codazzi twice plus the Ricci identity give
    //   grad_i grad_j H_k = Delta h_ijk + g^{ab} grad_a C_{ibjk} + grad_i W_jk
    //                       - g^{ab} g^{ef} (R_fbia h_ejk + R_fjia h_bek + R_fkia h_bje)
    // with C_{ljik} = -Rbar(v_i,F_k,F_l,F_j), W_jk = g^{ab} C_{jabk}, the
    // intrinsic R replaced through Gauss, and grad of a pulled-back curvature
    // expanded by D_a F_l = -h^s_al v_s, D_a v_j = -g_aj T + h^s_aj F_s.
    {
      const int Tn = 2 * n;
      auto g = [&](int a, int b) { return ff.g(a * n + b, x); };
      auto rg = [&](int a, int b, int c, int d) {
        double val = P.r(F(a), F(b), F(c), F(d));
        for (int e = 0; e < n; ++e) val += up1(e, a, c) * h(e, b, d) - up1(e, a, d) * h(e, b, c);
        return val;
      };
      // grad_a of Rbar(v_p, F_q, F_r, F_t) as a pulled-back tensor
      auto dpull = [&](int a, int p_, int q, int r, int t_) {
        double val = P.dr(a, v(p_), F(q), F(r), F(t_));
        val -= g(a, p_) * P.r(Tn, F(q), F(r), F(t_));
        for (int s = 0; s < n; ++s) {
          val += up1(s, a, p_) * P.r(F(s), F(q), F(r), F(t_));
          val -= up1(s, a, q) * P.r(v(p_), v(s), F(r), F(t_));
          val -= up1(s, a, r) * P.r(v(p_), F(q), v(s), F(t_));
          val -= up1(s, a, t_) * P.r(v(p_), F(q), F(r), v(s));
        }
        return val;
      };
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double lap = 0.0;
            for (int a = 0; a < n; ++a)
              for (int l = 0; l < n; ++l) lap += gi(a, l) * DDh((((a * n + l) * n + i) * n + j) * n + k, x);
            double val = lap;
            for (int a = 0; a < n; ++a)
              for (int b = 0; b < n; ++b) {
                val -= gi(a, b) * dpull(a, j, k, i, b);  // grad_a C_{ibjk}
                val -= gi(a, b) * dpull(i, b, k, j, a);  // grad_i W_jk
                for (int e = 0; e < n; ++e)
                  for (int f = 0; f < n; ++f)
                    val -= gi(a, b) * gi(e, f) *
                           (rg(f, b, i, a) * h(e, j, k) + rg(f, j, i, a) * h(b, e, k) + rg(f, k, i, a) * h(b, j, e));
              }
            t.simons_rhs((i * n + j) * n + k, x) = val;
          }
    }
    if (n == 1) {
      // hand reduction: every cubic term and the second curvature bracket cancel,
      // Ric contributes -(q h / 2)(Ric(F,F) + Ric(v,v)), the first bracket -q^2 Rbar(v,F,v,F) h
      const double q = gi(0, 0);
      const double hh = h(0, 0, 0);
      t.simons_n1(x) = -0.5 * q * hh * (P.ric(0, 0) + P.ric(1, 1)) - q * q * P.r(1, 0, 1, 0) * hh -
                       0.5 * P.dJ[0] + 0.5 * P.div[0];
    }
  }
  if (n == 1) {
    // Laplacian of h along the curve in scalar form: G = g'/(2g),
    // nabla h = h' - 3 G h, Delta h = q ((nabla h)' - 4 G nabla h)
    const VectorXd g = ff.g.row(0).transpose();
    const VectorXd hh = sff.h.row(0).transpose();
    const VectorXd G = 0.5 * L.diff().diff(g, 0).cwiseQuotient(g);
    const VectorXd nh = L.diff().diff(hh, 0) - 3.0 * G.cwiseProduct(hh);
    const VectorXd lap = (L.diff().diff(nh, 0) - 4.0 * G.cwiseProduct(nh)).cwiseQuotient(g);
    t.simons_n1 += lap;
  }
  return t;
}

/// Residual table for one discrete Legendrian.
inline std::vector<ResidualReport> submanifold_identity_residuals(const DiscreteLegendrian& L) {
  const int n = L.n();
  const SecondFundamentalData sff = second_fundamental(L);
  const SubmanifoldTerms t = submanifold_terms(L, sff);
  std::vector<int> res;
  for (int a = 0; a < L.grid().dims(); ++a) res.push_back(L.grid().extent(a));

  auto make = [&](const std::string& id, const detail::Accum& acc, const std::string& note = "",
                  bool info = false) {
    ResidualReport r;
    r.id = id;
    r.max_residual = acc.max;
    r.mean_residual = acc.mean();
    r.resolution = res;
    r.threshold = detail::identity_threshold(id, n);
    r.informational = info;
    r.pass = info || acc.max < r.threshold;
    r.note = note;
    return r;
  };
  detail::Accum gauss, codazzi, traced, literal, simons, simons_lit, cross, sym, reeb;
  for (int x = 0; x < L.nodes(); ++x) {
    for (int r = 0; r < t.Rint.rows(); ++r) gauss.add(t.Rint(r, x) - t.gauss_rhs(r, x));
    for (int r = 0; r < t.codazzi_lhs.rows(); ++r) codazzi.add(t.codazzi_lhs(r, x) - t.codazzi_rhs(r, x));
    for (int r = 0; r < t.ric_int.rows(); ++r) {
      traced.add(t.ric_int(r, x) - t.traced_rhs(r, x));
      literal.add(t.ric_int(r, x) - t.traced_literal_rhs(r, x));
    }
    for (int r = 0; r < t.simons_lhs.rows(); ++r) {
      simons.add(t.simons_lhs(r, x) - t.simons_rhs(r, x));
      simons_lit.add(t.simons_lhs(r, x) - t.simons_literal_rhs(r, x));
    }
    if (n == 1) cross.add(t.simons_n1(x) - t.simons_literal_rhs(0, x));
  }
  sym.add(sff.symmetry_residual);
  reeb.add(sff.reeb_residual);
  std::vector<ResidualReport> out;
  out.push_back(make("gauss", gauss));
  out.push_back(make("codazzi", codazzi));
  out.push_back(make("traced_gauss", traced, "tangential trace g^{jl} Rbar(F_i,F_j,F_k,F_l)"));
  out.push_back(make("traced_gauss_literal", literal,
                     "convention note: full ambient Ricci in place of the tangential trace", true));
  out.push_back(make("simons", simons, "Codazzi + Ricci identity, Gauss and grad Rbar expanded"));
  out.push_back(make("simons_literal", simons_lit, "convention note: source term grouping", true));
  if (n == 1)
    out.push_back(make("simons_n1_crosscheck", cross, "literal index form vs its hand reduction"));
  out.push_back(make("h_symmetry", sym));
  out.push_back(make("reeb_A", reeb));
  return out;
}

/// Number of spatial derivatives of the positions entering an identity; it
/// sets the roundoff floor of the refinement rule.
inline int derivative_count(const std::string& id) {
  if (id == "simons" || id == "simons_literal" || id == "simons_n1_crosscheck") return 4;
  if (id == "gauss" || id == "codazzi" || id == "traced_gauss" || id == "traced_gauss_literal") return 3;
  return 2;
}

struct RefinementRow {
  std::string id;
  double coarse = 0.0, fine = 0.0;
  double ratio = 0.0;  // coarse / fine
  double floor = 0.0;
  bool pass = false;
  bool informational = false;
};

/// Identity residuals at a resolution and its doubling. A gating identity
/// passes when both levels meet their thresholds and the fine residual either
/// dropped by 10x or sits below the roundoff floor
/// max(1e-10, 1e-14 (N/2)^d) for d spatial derivatives.
inline std::vector<RefinementRow> identity_refinement(const SasakianModel& model, const Parametrization& par,
                                                      std::vector<int> resolution) {
  const auto coarse = submanifold_identity_residuals(build_immersion(model, par, resolution));
  for (int& r : resolution) r *= 2;
  const auto fine = submanifold_identity_residuals(build_immersion(model, par, resolution));
  const int Nf = *std::max_element(resolution.begin(), resolution.end());
  std::vector<RefinementRow> out;
  for (std::size_t q = 0; q < coarse.size(); ++q) {
    RefinementRow row;
    row.id = coarse[q].id;
    row.coarse = coarse[q].max_residual;
    row.fine = fine[q].max_residual;
    row.ratio = row.fine > 0.0 ? row.coarse / row.fine : std::numeric_limits<double>::infinity();
    row.floor = std::max(1e-10, 1e-14 * std::pow(0.5 * Nf, derivative_count(row.id)));
    row.informational = coarse[q].informational;
    row.pass = row.informational ||
               (coarse[q].pass && fine[q].pass && (row.fine < row.floor || row.ratio >= 10.0));
    out.push_back(row);
  }
  return out;
}

}  // namespace lmcf
