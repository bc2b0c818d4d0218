#pragma once

// Eta-Einstein Sasakian model spaces.
//
// Conventions used throughout the library:
//   * omega_ab = 1/2 (d_a lambda_b - d_b lambda_a), so that nabla_a lambda_b = omega_ab.
//   * J^a_b = nabla_b T^a, omega(X,Y) = g(JX, Y), g = lambda (x) lambda + omega(., J.).
//   * R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb},
//     R_{abcd} = g_{ae} R^e_{bcd}; the unit sphere has R_abcd = g_ac g_bd - g_ad g_bc.
//
// Chart models (Heisenberg, hyperbolic cylinder) are written as g = b + lambda^2
// with a transverse metric b; closed-form first and second jets of b and lambda
// give the Christoffel symbols and the curvature exactly. Sphere models live in
// the embedding R^{2n+2}: tensors are projected with P = I - p p^T and the
// connection acts as P o d on tangent fields.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lmcf/errors.hpp"
#include "lmcf/tensor.hpp"

namespace lmcf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class ModelKind { HeisenbergR3, HeisenbergR5, SphereS3, SphereS5, HyperbolicCylinder3 };

enum class EvaluationMode { closed_form, finite_difference };

/// Contact metric frame at a point. J(a,b) stores J^a_b.
struct Frame {
  MatrixXd g;
  MatrixXd ginv;
  VectorXd lambda;
  VectorXd reeb;
  MatrixXd J;
  MatrixXd omega;
};

struct CurvaturePack {
  Tensor<4> riemann;        // R_{abcd}
  MatrixXd ricci;           // Ric_{ab}
  Tensor<5> nabla_riemann;  // nabla_s R_{abcd}, slot order (s,a,b,c,d)
  EvaluationMode evaluation_mode = EvaluationMode::closed_form;
};

class SasakianModel;

/// A point in the model's global chart (or in the embedding for spheres).
struct ChartPoint {
  VectorXd coords;
};

class SasakianModel {
 public:
  static SasakianModel from_id(std::string_view id) {
    if (id == "heisenberg3") return SasakianModel(ModelKind::HeisenbergR3);
    if (id == "heisenberg5") return SasakianModel(ModelKind::HeisenbergR5);
    if (id == "sphere3") return SasakianModel(ModelKind::SphereS3);
    if (id == "sphere5") return SasakianModel(ModelKind::SphereS5);
    if (id == "hypcyl3") return SasakianModel(ModelKind::HyperbolicCylinder3);
    throw UnknownModel("unknown model id '" + std::string(id) + "'");
  }

  explicit SasakianModel(ModelKind kind) : kind_(kind) {
    switch (kind) {
      case ModelKind::HeisenbergR3: n_ = 1; break;
      case ModelKind::HeisenbergR5: n_ = 2; break;
      case ModelKind::SphereS3: n_ = 1; break;
      case ModelKind::SphereS5: n_ = 2; break;
      case ModelKind::HyperbolicCylinder3: n_ = 1; break;
    }
  }

  ModelKind kind() const { return kind_; }
  std::string id() const {
    switch (kind_) {
      case ModelKind::HeisenbergR3: return "heisenberg3";
      case ModelKind::HeisenbergR5: return "heisenberg5";
      case ModelKind::SphereS3: return "sphere3";
      case ModelKind::SphereS5: return "sphere5";
      case ModelKind::HyperbolicCylinder3: return "hypcyl3";
    }
    return {};
  }
  int n() const { return n_; }
  int ambient_dim() const { return 2 * n_ + 1; }
  /// Length of a coordinate vector: 2n+1 for charts, 2n+2 for spheres.
  int coord_dim() const { return embedded() ? 2 * n_ + 2 : 2 * n_ + 1; }
  bool embedded() const {
    return kind_ == ModelKind::SphereS3 || kind_ == ModelKind::SphereS5;
  }

  /// Stored eta-Einstein constant K+2 (checked against the Ricci fit by tests).
  double eta_einstein_constant() const {
    switch (kind_) {
      case ModelKind::SphereS3:
      case ModelKind::SphereS5: return 2.0 * n_ + 2.0;
      case ModelKind::HeisenbergR3:
      case ModelKind::HeisenbergR5: return 0.0;
      case ModelKind::HyperbolicCylinder3: return -1.0;
    }
    return 0.0;
  }

  /// Lower bound on the injectivity radius. All models have sectional
  /// curvature <= 1 and (after the quotient) shortest closed geodesic >= 2 pi.
  double injectivity_lower_bound() const { return std::numbers::pi; }

  /// Coordinates on which the metric components actually depend.
  std::vector<int> active_coords() const {
    switch (kind_) {
      case ModelKind::HeisenbergR3: return {1};
      case ModelKind::HeisenbergR5: return {1, 3};
      case ModelKind::HyperbolicCylinder3: return {0};
      default: break;
    }
    std::vector<int> all(coord_dim());
    for (int i = 0; i < coord_dim(); ++i) all[i] = i;
    return all;
  }

  /// Index of the periodic angle coordinate, -1 if none.
  int periodic_coord() const { return kind_ == ModelKind::HyperbolicCylinder3 ? 1 : -1; }

  /// Reeb flow by time t (exact in all models: z-translation or Hopf rotation).
  VectorXd reeb_shift(const VectorXd& p, double t) const {
    VectorXd q = p;
    if (embedded()) {
      const double c = std::cos(t), s = std::sin(t);
      for (int k = 0; k <= n_; ++k) {
        const double x = p(2 * k), y = p(2 * k + 1);
        q(2 * k) = c * x - s * y;
        q(2 * k + 1) = s * x + c * y;
      }
    } else {
      q(coord_dim() - 1) += t;
    }
    return q;
  }

  // ---- raw point evaluations (no chart validation) -------------------------

  /// Frame without chart validation; for spheres the fields are extended
  /// off the sphere (P = I - p p^T, T = M p) so they can be differentiated.
  Frame frame_raw(const VectorXd& p) const {
    if (embedded()) return sphere_frame(p);
    const Jet jet = chart_jet(p);
    Frame f;
    const int D = coord_dim();
    f.lambda = jet.lam;
    f.g = jet.b + jet.lam * jet.lam.transpose();
    f.ginv = f.g.inverse();
    f.reeb = f.ginv * f.lambda;
    f.omega = MatrixXd::Zero(D, D);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) f.omega(a, b) = 0.5 * (jet.dlam(a, b) - jet.dlam(b, a));
    // J^c_a = g^{cb} omega_{ab}
    f.J = f.ginv * f.omega.transpose();
    return f;
  }

  /// Christoffel symbols G^a_{bc} (sphere: p^a P_bc, valid on tangent vectors).
  Tensor<3> christoffel_raw(const VectorXd& p) const {
    const int D = coord_dim();
    Tensor<3> G(D);
    if (embedded()) {
      const MatrixXd P = projector(p);
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
          for (int c = 0; c < D; ++c) G(a, b, c) = p(a) * P(b, c);
      return G;
    }
    const Jet jet = chart_jet(p);
    const MetricJet mj = metric_jet(jet);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c) {
          double s = 0.0;
          for (int d = 0; d < D; ++d)
            s += mj.ginv(a, d) * (mj.dg(b, d, c) + mj.dg(c, d, b) - mj.dg(d, b, c));
          G(a, b, c) = 0.5 * s;
        }
    return G;
  }

  /// Riemann tensor R_{abcd} in closed form.
  Tensor<4> riemann_raw(const VectorXd& p) const {
    const int D = coord_dim();
    Tensor<4> R(D);
    if (embedded()) {
      const MatrixXd P = projector(p);
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
          for (int c = 0; c < D; ++c)
            for (int d = 0; d < D; ++d) R(a, b, c, d) = P(a, c) * P(b, d) - P(a, d) * P(b, c);
      return R;
    }
    const Jet jet = chart_jet(p);
    const MetricJet mj = metric_jet(jet);
    // G^a_{bc} and d_e G^a_{bc}
    Tensor<3> G(D);
    Tensor<4> dG(D);  // (e,a,b,c)
    Tensor<3> S(D);   // S_{dbc} = d_b g_dc + d_c g_db - d_d g_bc
    for (int d = 0; d < D; ++d)
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c) S(d, b, c) = mj.dg(b, d, c) + mj.dg(c, d, b) - mj.dg(d, b, c);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c) {
          double s = 0.0;
          for (int d = 0; d < D; ++d) s += mj.ginv(a, d) * S(d, b, c);
          G(a, b, c) = 0.5 * s;
        }
    for (int e = 0; e < D; ++e) {
      // d_e g^{ad} = -g^{af} d_e g_fh g^{hd}
      MatrixXd dge(D, D);
      for (int f = 0; f < D; ++f)
        for (int h = 0; h < D; ++h) dge(f, h) = mj.dg(e, f, h);
      const MatrixXd dginv = -mj.ginv * dge * mj.ginv;
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
          for (int c = 0; c < D; ++c) {
            double s = 0.0;
            for (int d = 0; d < D; ++d) {
              const double dS = mj.ddg(e, b, d, c) + mj.ddg(e, c, d, b) - mj.ddg(e, d, b, c);
              s += dginv(a, d) * S(d, b, c) + mj.ginv(a, d) * dS;
            }
            dG(e, a, b, c) = 0.5 * s;
          }
    }
    Tensor<4> Rup(D);  // R^a_{bcd}
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c)
          for (int d = 0; d < D; ++d) {
            double s = dG(c, a, d, b) - dG(d, a, c, b);
            for (int e = 0; e < D; ++e) s += G(a, c, e) * G(e, d, b) - G(a, d, e) * G(e, c, b);
            Rup(a, b, c, d) = s;
          }
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c)
          for (int d = 0; d < D; ++d) {
            double s = 0.0;
            for (int e = 0; e < D; ++e) s += mj.g(a, e) * Rup(e, b, c, d);
            R(a, b, c, d) = s;
          }
    return R;
  }

  /// nabla_s R_{abcd}. Zero for the locally symmetric spheres; for chart
  /// models the partial derivatives of the closed-form components are taken
  /// by 4th-order central differences along the active coordinates.
  Tensor<5> nabla_riemann_raw(const VectorXd& p) const {
    const int D = coord_dim();
    Tensor<5> out(D);
    if (embedded()) return out;
    const Tensor<4> R = riemann_raw(p);
    const Tensor<3> G = christoffel_raw(p);
    constexpr double h = 1e-3;
    std::vector<Tensor<4>> dR(D, Tensor<4>(D));
    for (int s : active_coords()) {
      auto shifted = [&](double t) {
        VectorXd q = p;
        q(s) += t;
        return riemann_raw(q);
      };
      const Tensor<4> p2 = shifted(2 * h), p1 = shifted(h), m1 = shifted(-h), m2 = shifted(-2 * h);
      for (std::size_t i = 0; i < dR[s].size(); ++i)
        dR[s].data()[i] =
            (-p2.data()[i] + 8.0 * p1.data()[i] - 8.0 * m1.data()[i] + m2.data()[i]) / (12.0 * h);
    }
    for (int s = 0; s < D; ++s)
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
          for (int c = 0; c < D; ++c)
            for (int d = 0; d < D; ++d) {
              double v = dR[s](a, b, c, d);
              for (int e = 0; e < D; ++e)
                v -= G(e, s, a) * R(e, b, c, d) + G(e, s, b) * R(a, e, c, d) +
                     G(e, s, c) * R(a, b, e, d) + G(e, s, d) * R(a, b, c, e);
              out(s, a, b, c, d) = v;
            }
    return out;
  }

  static MatrixXd projector(const VectorXd& p) {
    return MatrixXd::Identity(p.size(), p.size()) - p * p.transpose();
  }

 private:
  struct Jet {
    VectorXd lam;     // lambda_a
    MatrixXd dlam;    // (c,a) = d_c lambda_a
    Tensor<3> ddlam;  // (c,d,a)
    MatrixXd b;       // transverse metric b_ab
    Tensor<3> db;     // (c,a,b)
    Tensor<4> ddb;    // (c,d,a,b)
  };
  struct MetricJet {
    MatrixXd g, ginv;
    Tensor<3> dg;   // (c,a,b)
    Tensor<4> ddg;  // (c,d,a,b)
  };

  Jet chart_jet(const VectorXd& p) const {
    const int D = coord_dim();
    Jet j{VectorXd::Zero(D), MatrixXd::Zero(D, D), Tensor<3>(D), MatrixXd::Zero(D, D),
          Tensor<3>(D), Tensor<4>(D)};
    switch (kind_) {
      case ModelKind::HeisenbergR3:
        // lambda = dz - y dx, b = (dx^2 + dy^2)/2
        j.lam << -p(1), 0.0, 1.0;
        j.dlam(1, 0) = -1.0;
        j.b(0, 0) = j.b(1, 1) = 0.5;
        break;
      case ModelKind::HeisenbergR5:
        // (x1,y1,x2,y2,z), lambda = dz - y1 dx1 - y2 dx2
        j.lam << -p(1), 0.0, -p(3), 0.0, 1.0;
        j.dlam(1, 0) = -1.0;
        j.dlam(3, 2) = -1.0;
        for (int i = 0; i < 4; ++i) j.b(i, i) = 0.5;
        break;
      case ModelKind::HyperbolicCylinder3: {
        // (rho, phi, z), lambda = dz + 2 sinh(rho) dphi, b = drho^2 + cosh^2(rho) dphi^2
        const double sh = std::sinh(p(0)), ch = std::cosh(p(0));
        j.lam << 0.0, 2.0 * sh, 1.0;
        j.dlam(0, 1) = 2.0 * ch;
        j.ddlam(0, 0, 1) = 2.0 * sh;
        j.b(0, 0) = 1.0;
        j.b(1, 1) = ch * ch;
        j.db(0, 1, 1) = 2.0 * sh * ch;
        j.ddb(0, 0, 1, 1) = 2.0 * (ch * ch + sh * sh);
        break;
      }
      default: break;
    }
    return j;
  }

  MetricJet metric_jet(const Jet& j) const {
    const int D = coord_dim();
    MetricJet m{j.b + j.lam * j.lam.transpose(), MatrixXd(), Tensor<3>(D), Tensor<4>(D)};
    m.ginv = m.g.inverse();
    for (int c = 0; c < D; ++c)
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
          m.dg(c, a, b) = j.db(c, a, b) + j.dlam(c, a) * j.lam(b) + j.lam(a) * j.dlam(c, b);
    for (int c = 0; c < D; ++c)
      for (int d = 0; d < D; ++d)
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b)
            m.ddg(c, d, a, b) = j.ddb(c, d, a, b) + j.ddlam(c, d, a) * j.lam(b) +
                                j.dlam(c, a) * j.dlam(d, b) + j.dlam(d, a) * j.dlam(c, b) +
                                j.lam(a) * j.ddlam(c, d, b);
    return m;
  }

  /// Multiplication by i on C^{n+1} = R^{2n+2} with coordinates (x1,y1,x2,y2,...).
  MatrixXd complex_structure() const {
    const int D = coord_dim();
    MatrixXd M = MatrixXd::Zero(D, D);
    for (int k = 0; k <= n_; ++k) {
      M(2 * k + 1, 2 * k) = 1.0;
      M(2 * k, 2 * k + 1) = -1.0;
    }
    return M;
  }

  Frame sphere_frame(const VectorXd& p) const {
    const MatrixXd P = projector(p);
    const MatrixXd M = complex_structure();
    Frame f;
    f.g = P;
    f.ginv = P;
    f.reeb = M * p;
    f.lambda = M * p;
    f.J = P * M * P;
    f.omega = P * M.transpose() * P;
    return f;
  }

  ModelKind kind_;
  int n_ = 1;
};

inline void validate_point(const SasakianModel& model, const ChartPoint& p, double tol = 1e-10) {
  if (p.coords.size() != model.coord_dim())
    throw PointOutsideChart("coordinate vector has length " + std::to_string(p.coords.size()) +
                            ", expected " + std::to_string(model.coord_dim()));
  if (!p.coords.allFinite()) throw PointOutsideChart("non-finite coordinates");
  if (model.embedded() && std::abs(p.coords.norm() - 1.0) > tol)
    throw PointOutsideChart("sphere point is not unit norm (|p| - 1 = " +
                            std::to_string(p.coords.norm() - 1.0) + ")");
}

/// Builds a validated chart point; sphere points must be unit within 1e-12,
/// the hyperbolic angle is wrapped into [0, 2 pi).
inline ChartPoint make_chart_point(const SasakianModel& model, VectorXd coords) {
  ChartPoint p{std::move(coords)};
  validate_point(model, p, 1e-12);
  const int pc = model.periodic_coord();
  if (pc >= 0) {
    const double two_pi = 2.0 * std::numbers::pi;
    double v = std::fmod(p.coords(pc), two_pi);
    if (v < 0) v += two_pi;
    p.coords(pc) = v;
  }
  return p;
}

inline Frame frame_at(const SasakianModel& model, const ChartPoint& p) {
  validate_point(model, p);
  return model.frame_raw(p.coords);
}

inline Tensor<3> connection_at(const SasakianModel& model, const ChartPoint& p) {
  validate_point(model, p);
  return model.christoffel_raw(p.coords);
}

inline MatrixXd ricci_from(const Tensor<4>& R, const MatrixXd& ginv) {
  const int D = R.extent();
  MatrixXd ric = MatrixXd::Zero(D, D);
  for (int b = 0; b < D; ++b)
    for (int d = 0; d < D; ++d) {
      double s = 0.0;
      for (int a = 0; a < D; ++a)
        for (int c = 0; c < D; ++c) s += ginv(a, c) * R(a, b, c, d);
      ric(b, d) = s;
    }
  return ric;
}

inline CurvaturePack curvature_at(const SasakianModel& model, const ChartPoint& p) {
  validate_point(model, p);
  CurvaturePack pack;
  pack.riemann = model.riemann_raw(p.coords);
  pack.ricci = ricci_from(pack.riemann, model.frame_raw(p.coords).ginv);
  pack.nabla_riemann = model.nabla_riemann_raw(p.coords);
  pack.evaluation_mode = EvaluationMode::closed_form;
  return pack;
}

/// Fitted transverse Einstein constant K at a point from Ric = K g + (2n-K) lambda^2.
inline double fitted_K(const SasakianModel& model, const MatrixXd& ricci, const Frame& f) {
  const int n = model.n();
  const double scal = (f.ginv.cwiseProduct(ricci)).sum();
  return (scal - 2.0 * n) / (2.0 * n);
}

inline double eta_einstein_constant(const SasakianModel& model) {
  return model.eta_einstein_constant();
}

/// Uniform-ish random sample points in each model's chart.
inline std::vector<ChartPoint> sample_points(const SasakianModel& model, int count,
                                             std::uint64_t seed = 12345) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<ChartPoint> pts;
  pts.reserve(count);
  const int D = model.coord_dim();
  for (int i = 0; i < count; ++i) {
    VectorXd c(D);
    if (model.embedded()) {
      for (int a = 0; a < D; ++a) c(a) = gauss(rng);
      c /= c.norm();
    } else if (model.kind() == ModelKind::HyperbolicCylinder3) {
      c << 1.5 * unif(rng), std::numbers::pi * (1.0 + unif(rng)), 2.0 * unif(rng);
    } else {
      for (int a = 0; a < D; ++a) c(a) = 2.0 * unif(rng);
    }
    pts.push_back(make_chart_point(model, c));
  }
  return pts;
}

/// Max residual per Sasakian / eta-Einstein identity over a set of points.
struct AmbientResidualReport {
  std::map<std::string, double> max_residual;
  std::vector<double> fitted_kplus2;  // per point
  double worst() const {
    double w = 0.0;
    for (const auto& [k, v] : max_residual) w = std::max(w, v);
    return w;
  }
};

namespace detail {

template <typename Field>
auto fd_partial(const Field& field, const VectorXd& p, int coord, double h = 1e-3) {
  auto at = [&](double t) {
    VectorXd q = p;
    q(coord) += t;
    return field(q);
  };
  return ((-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h)).eval();
}

inline void bump(std::map<std::string, double>& m, const std::string& key, double v) {
  auto [it, inserted] = m.emplace(key, v);
  if (!inserted) it->second = std::max(it->second, v);
}

}  // namespace detail

/// Evaluates every ambient identity at each point; derivatives of the frame
/// fields are taken by finite differences, independent of the analytic jets.
inline AmbientResidualReport ambient_identity_residuals(const SasakianModel& model,
                                                        const std::vector<ChartPoint>& points,
                                                        std::uint64_t seed = 777) {
  AmbientResidualReport rep;
  const int D = model.coord_dim();
  const int n = model.n();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto& mr = rep.max_residual;

  for (const ChartPoint& cp : points) {
    validate_point(model, cp);
    const VectorXd& p = cp.coords;
    const Frame f = model.frame_raw(p);
    const Tensor<3> G = model.christoffel_raw(p);
    const Tensor<4> R = model.riemann_raw(p);
    const MatrixXd ric = ricci_from(R, f.ginv);
    const MatrixXd P = model.embedded() ? SasakianModel::projector(p) : MatrixXd::Identity(D, D);
    const MatrixXd& gi = f.ginv;

    // Reeb defining equations and adapted metric.
    detail::bump(mr, "reeb_lambda_T", std::abs(f.lambda.dot(f.reeb) - 1.0));
    detail::bump(mr, "reeb_dlambda_T", (f.omega.transpose() * f.reeb).cwiseAbs().maxCoeff());
    detail::bump(mr, "adapted_metric_gT", (f.g * f.reeb - f.lambda).cwiseAbs().maxCoeff());
    detail::bump(mr, "adapted_metric_decomposition",
                 (f.g - f.lambda * f.lambda.transpose() - f.omega * f.J).cwiseAbs().maxCoeff());
    const MatrixXd pi = P - f.reeb * f.lambda.transpose();
    detail::bump(mr, "J_squared", (f.J * f.J + pi).cwiseAbs().maxCoeff());

    // d lambda (T, .) = 0 from derivatives of lambda.
    std::vector<MatrixXd> dJ(D, MatrixXd::Zero(D, D));
    std::vector<VectorXd> dlam(D, VectorXd::Zero(D)), dT(D, VectorXd::Zero(D));
    std::vector<MatrixXd> dg(D, MatrixXd::Zero(D, D));
    for (int c = 0; c < D; ++c) {
      dlam[c] = detail::fd_partial([&](const VectorXd& q) { return model.frame_raw(q).lambda; }, p, c);
      dT[c] = detail::fd_partial([&](const VectorXd& q) { return model.frame_raw(q).reeb; }, p, c);
      dJ[c] = detail::fd_partial([&](const VectorXd& q) { return model.frame_raw(q).J; }, p, c);
      if (!model.embedded())
        dg[c] = detail::fd_partial([&](const VectorXd& q) { return model.frame_raw(q).g; }, p, c);
    }
    // nabla lambda, nabla T, nabla J, nabla g
    MatrixXd nlam(D, D), nT(D, D);  // nlam(a,b) = nabla_a lambda_b ; nT(a,b) = nabla_b T^a
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) {
        double sl = dlam[a](b), st = dT[b](a);
        if (!model.embedded())
          for (int c = 0; c < D; ++c) {
            sl -= G(c, a, b) * f.lambda(c);
            st += G(a, b, c) * f.reeb(c);
          }
        nlam(a, b) = sl;
        nT(a, b) = st;
      }
    if (model.embedded()) {
      nlam = P * nlam * P;
      nT = P * nT * P;
    }
    {
      MatrixXd dl(D, D);
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) dl(a, b) = 0.5 * (dlam[a](b) - dlam[b](a));
      if (model.embedded()) dl = P * dl * P;
      detail::bump(mr, "dlambda_is_omega", (dl - f.omega).cwiseAbs().maxCoeff());
    }
    detail::bump(mr, "nabla_lambda_is_omega", (nlam - f.omega).cwiseAbs().maxCoeff());
    detail::bump(mr, "J_is_nabla_T", (nT - f.J).cwiseAbs().maxCoeff());
    if (!model.embedded()) {
      double r = 0.0;
      for (int c = 0; c < D; ++c)
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b) {
            double v = dg[c](a, b);
            for (int e = 0; e < D; ++e) v -= G(e, c, a) * f.g(e, b) + G(e, c, b) * f.g(a, e);
            r = std::max(r, std::abs(v));
          }
      detail::bump(mr, "metric_compatibility", r);
    }
    {
      // (nabla_c J)^a_b = lambda_b delta^a_c - g_cb T^a
      double r = 0.0;
      for (int c = 0; c < D; ++c) {
        MatrixXd nJ = dJ[c];
        if (!model.embedded())
          for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b)
              for (int e = 0; e < D; ++e) nJ(a, b) += G(a, c, e) * f.J(e, b) - G(e, c, b) * f.J(a, e);
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b) {
            double v = 0.0;
            if (model.embedded()) {
              // project all three slots
              for (int a2 = 0; a2 < D; ++a2)
                for (int b2 = 0; b2 < D; ++b2)
                  for (int c2 = 0; c2 < D; ++c2)
                    v += P(a, a2) * P(b2, b) * P(c2, c) * dJ[c2](a2, b2);
            } else {
              v = nJ(a, b);
            }
            const double rhs = f.lambda(b) * P(a, c) - f.g(c, b) * f.reeb(a);
            r = std::max(r, std::abs(v - rhs));
          }
      }
      detail::bump(mr, "nabla_J", r);
    }

    // Curvature identities.
    Tensor<4> Rup(D);  // R^e_{bcd}
    for (int e = 0; e < D; ++e)
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c)
          for (int d = 0; d < D; ++d) {
            double s = 0.0;
            for (int q = 0; q < D; ++q) s += gi(e, q) * R(q, b, c, d);
            Rup(e, b, c, d) = s;
          }
    const MatrixXd ricup = gi * ric;  // ricup(e,a) = R^e_a
    const MatrixXd& w = f.omega;
    const MatrixXd& g = f.g;
    const MatrixXd& J = f.J;
    const VectorXd& lam = f.lambda;
    double l0 = 0, l1 = 0, l2 = 0, l3 = 0, l4 = 0, rt = 0, sym = 0, l0T = 0;
    for (int gm = 0; gm < D; ++gm)
      for (int al = 0; al < D; ++al)
        for (int be = 0; be < D; ++be) {
          double lhs = 0.0;
          for (int e = 0; e < D; ++e) lhs += Rup(e, gm, al, be) * lam(e);
          l0 = std::max(l0, std::abs(lhs - (g(gm, be) * lam(al) - g(gm, al) * lam(be))));
          // R(X,T)Y = g(T,Y)X - g(X,Y)T :  R^e_{b c d} T^d = lam_b P^e_c - g_cb T^e
          double rx = 0.0;
          for (int d = 0; d < D; ++d) rx += Rup(gm, al, be, d) * f.reeb(d);
          rt = std::max(rt, std::abs(rx - (lam(al) * P(gm, be) - g(be, al) * f.reeb(gm))));
        }
    // (L0) contracted with T in all slots
    {
      double s = 0.0;
      for (int e = 0; e < D; ++e)
        for (int b = 0; b < D; ++b)
          for (int c = 0; c < D; ++c)
            for (int d = 0; d < D; ++d)
              s += Rup(e, b, c, d) * lam(e) * f.reeb(b) * f.reeb(c) * f.reeb(d);
      l0T = std::abs(s);
    }
    for (int gm = 0; gm < D; ++gm)
      for (int dl = 0; dl < D; ++dl)
        for (int al = 0; al < D; ++al)
          for (int be = 0; be < D; ++be) {
            double lhs = 0.0;
            for (int e = 0; e < D; ++e) lhs += Rup(e, gm, al, be) * w(e, dl) + Rup(e, dl, al, be) * w(gm, e);
            const double rhs = -g(be, dl) * w(al, gm) + g(be, gm) * w(al, dl) + g(al, dl) * w(be, gm) -
                               g(al, gm) * w(be, dl);
            l1 = std::max(l1, std::abs(lhs - rhs));
            const double s1 = R(gm, dl, al, be) + R(dl, gm, al, be);
            const double s2 = R(gm, dl, al, be) - R(al, be, gm, dl);
            const double s3 = R(gm, dl, al, be) + R(gm, al, be, dl) + R(gm, be, dl, al);
            sym = std::max({sym, std::abs(s1), std::abs(s2), std::abs(s3)});
          }
    for (int gm = 0; gm < D; ++gm)
      for (int al = 0; al < D; ++al) {
        double lhs2 = 0.0, lhs3 = 0.0, rhs2 = 0.0, rhs3 = 0.0;
        for (int be = 0; be < D; ++be)
          for (int e = 0; e < D; ++e) {
            lhs2 += J(be, e) * Rup(e, gm, al, be);
            lhs3 += J(be, e) * Rup(e, be, al, gm);
          }
        for (int e = 0; e < D; ++e) {
          rhs2 += ricup(e, al) * w(e, gm);
          rhs3 += ricup(e, gm) * w(al, e) - ricup(e, al) * w(gm, e);
        }
        rhs2 -= (2 * n - 1) * w(al, gm);
        rhs3 -= 2.0 * (2 * n - 1) * w(al, gm);
        l2 = std::max(l2, std::abs(lhs2 - rhs2));
        l3 = std::max(l3, std::abs(lhs3 - rhs3));
      }
    // (L4) with a random orthonormal Legendrian frame at p.
    {
      std::vector<VectorXd> X;
      for (int i = 0; i < n; ++i) {
        VectorXd y(D);
        for (int a = 0; a < D; ++a) y(a) = gauss(rng);
        y = P * y;
        y -= lam.dot(y) * f.reeb;
        for (const VectorXd& x : X) {
          y -= (x.transpose() * g * y)(0) * x;
          const VectorXd jx = J * x;
          y -= (jx.transpose() * g * y)(0) * jx;
        }
        y /= std::sqrt((y.transpose() * g * y)(0));
        X.push_back(y);
      }
      for (int gm = 0; gm < D; ++gm)
        for (int dl = 0; dl < D; ++dl) {
          double frame_side = 0.0;
          for (int i = 0; i < n; ++i) {
            const VectorXd v = J * X[i];
            for (int be = 0; be < D; ++be)
              for (int ep = 0; ep < D; ++ep) frame_side += R(gm, dl, be, ep) * v(be) * X[i](ep);
          }
          double mid = 0.0;
          for (int be = 0; be < D; ++be)
            for (int sg = 0; sg < D; ++sg) mid += -0.5 * J(sg, be) * Rup(be, sg, gm, dl);
          double rhs = 0.0;
          for (int e = 0; e < D; ++e) rhs += ricup(e, gm) * w(dl, e) - ricup(e, dl) * w(gm, e);
          rhs = 0.5 * (rhs - 2.0 * (2 * n - 1) * w(dl, gm));
          l4 = std::max({l4, std::abs(frame_side - mid), std::abs(mid - rhs)});
        }
    }
    detail::bump(mr, "L0", l0);
    detail::bump(mr, "L0_all_T", l0T);
    detail::bump(mr, "L1", l1);
    detail::bump(mr, "L2", l2);
    detail::bump(mr, "L3", l3);
    detail::bump(mr, "L4", l4);
    detail::bump(mr, "R_X_T_Y", rt);
    detail::bump(mr, "riemann_symmetries", sym);

    // Ricci structure Ric = K g + (2n - K) lambda^2 with the fitted K.
    const double K = fitted_K(model, ric, f);
    const MatrixXd model_ric = K * g + (2.0 * n - K) * lam * lam.transpose();
    detail::bump(mr, "eta_einstein_ricci", (ric - model_ric).cwiseAbs().maxCoeff());
    rep.fitted_kplus2.push_back(K + 2.0);
  }
  return rep;
}

namespace detail {

/// Iterated covariant derivative nabla^k Rm by nested central differences of
/// components along active coordinates.
inline DynTensor nabla_k_riemann(const SasakianModel& model, const VectorXd& p, int k, double h) {
  const int D = model.coord_dim();
  if (k == 0) {
    const Tensor<4> R = model.riemann_raw(p);
    DynTensor t(D, 4);
    t.data() = R.data();
    return t;
  }
  const DynTensor base = nabla_k_riemann(model, p, k - 1, h);
  const int r = base.rank();
  DynTensor out(D, r + 1);
  const std::size_t block = base.data().size();
  for (int s : model.active_coords()) {
    auto at = [&](double t) {
      VectorXd q = p;
      q(s) += t;
      return nabla_k_riemann(model, q, k - 1, h);
    };
    const DynTensor p2 = at(2 * h), p1 = at(h), m1 = at(-h), m2 = at(-2 * h);
    for (std::size_t i = 0; i < block; ++i)
      out.data()[s * block + i] =
          (-p2.data()[i] + 8.0 * p1.data()[i] - 8.0 * m1.data()[i] + m2.data()[i]) / (12.0 * h);
  }
  const Tensor<3> G = model.christoffel_raw(p);
  // subtract G^e_{s a_slot} T_{...e...}
  std::vector<int> idx(r);
  for (int s = 0; s < D; ++s)
    for (std::size_t i = 0; i < block; ++i) {
      std::size_t rem = i;
      for (int q = r - 1; q >= 0; --q) {
        idx[q] = static_cast<int>(rem % D);
        rem /= D;
      }
      double corr = 0.0;
      for (int slot = 0; slot < r; ++slot) {
        const std::size_t st = base.stride(slot);
        const std::size_t without = i - static_cast<std::size_t>(idx[slot]) * st;
        for (int e = 0; e < D; ++e) corr += G(e, s, idx[slot]) * base.data()[without + e * st];
      }
      out.data()[s * block + i] -= corr;
    }
  return out;
}

inline double tensor_norm(const DynTensor& t, const MatrixXd& frame) {
  // frame: columns give a g-orthonormal basis, applied to every slot.
  std::vector<double> cur = t.data();
  const int D = t.extent();
  const int r = t.rank();
  std::vector<double> next(cur.size());
  for (int slot = 0; slot < r; ++slot) {
    std::size_t st = 1;
    for (int i = slot + 1; i < r; ++i) st *= D;
    const std::size_t outer = cur.size() / (st * D);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t in = 0; in < st; ++in)
        for (int A = 0; A < D; ++A) {
          double s = 0.0;
          for (int a = 0; a < D; ++a) s += frame(a, A) * cur[(o * D + a) * st + in];
          next[(o * D + A) * st + in] = s;
        }
    std::swap(cur, next);
  }
  double s = 0.0;
  for (double v : cur) s += v * v;
  return std::sqrt(s);
}

}  // namespace detail

/// K_m = sum_{k<=m} sup |nabla^k Rm| for m = 0..max_order. The models are
/// locally homogeneous, so a few sample points represent the supremum.
inline std::vector<double> curvature_bounds(const SasakianModel& model, int max_order = 5,
                                            int samples = 2) {
  std::vector<double> sup(max_order + 1, 0.0);
  const auto pts = sample_points(model, samples, 99);
  for (const ChartPoint& cp : pts) {
    const VectorXd& p = cp.coords;
    const Frame f = model.frame_raw(p);
    MatrixXd E;
    if (model.embedded()) {
      E = f.g;  // P is an orthogonal projector: contraction with P == identity on tangent tensors
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(f.g);
      E = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
          es.eigenvectors().transpose();
    }
    for (int k = 0; k <= max_order; ++k) {
      if (model.embedded() && k > 0) break;  // locally symmetric
      const DynTensor t = detail::nabla_k_riemann(model, p, k, 0.02);
      sup[k] = std::max(sup[k], detail::tensor_norm(t, E));
    }
  }
  std::vector<double> K(max_order + 1);
  double acc = 0.0;
  for (int m = 0; m <= max_order; ++m) {
    acc += sup[m];
    K[m] = acc;
  }
  return K;
}

}  // namespace lmcf
