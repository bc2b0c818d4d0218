#pragma once

// Discretized closed Legendrian curves (n = 1) and tori (n = 2) on periodic
// grids, their fundamental data, Legendrian deformations and the Reeb-direction
// constraint projection.
//
// Positions are stored unwrapped: a coordinate may grow linearly around a
// cycle (the hyperbolic angle phi, or z on the Heisenberg central quotient);
// the growth rates live in `winding` (coordinate x axis).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lmcf/ambient.hpp"
#include "lmcf/errors.hpp"
#include "lmcf/spectral_diff.hpp"

namespace lmcf {

/// Default Legendrian tolerance by dimension.
inline double default_legendrian_tol(int n) { return n == 1 ? 1e-7 : 1e-6; }

struct FirstFundamental {
  std::array<MatrixXd, 2> tangent;  // F_i, D x nodes
  std::array<MatrixXd, 2> normal;   // v_k = J F_k
  MatrixXd g;                       // (i*n+j) x nodes
  MatrixXd ginv;
  VectorXd dmu;
  double vol = 0.0;
  double legendrian_residual = 0.0;
};

struct SecondFundamentalData {
  std::vector<MatrixXd> A;  // index i*n+j -> D x nodes
  MatrixXd h;               // (i*n+j)*n+k x nodes
  MatrixXd H;               // H_j, n x nodes
  VectorXd A_sq, H_sq;      // per node |A|^2, |H|^2
  double max_A_sq = 0.0, max_H_sq = 0.0;
  double symmetry_residual = 0.0;  // max |h_ijk - h_sigma(ijk)|
  double reeb_residual = 0.0;      // max |lambda(A_ij)|
  double max_H() const { return std::sqrt(max_H_sq); }
};

class DiscreteLegendrian {
 public:
  DiscreteLegendrian(SasakianModel model, PeriodicGrid grid, MatrixXd positions,
                     MatrixXd winding = MatrixXd())
      : model_(std::move(model)), grid_(std::move(grid)), pos_(std::move(positions)) {
    const int D = model_.coord_dim();
    if (winding.size() == 0) winding = MatrixXd::Zero(D, grid_.dims());
    winding_ = std::move(winding);
    if (pos_.rows() != D || pos_.cols() != grid_.size())
      throw SchemaError("position array shape does not match model/grid");
    if (grid_.dims() != model_.n())
      throw SchemaError("grid dimension must equal the Legendrian dimension n");
    if (!pos_.allFinite()) throw NonFiniteState("non-finite immersion positions");
    build_cache();
  }

  const SasakianModel& model() const { return model_; }
  const PeriodicGrid& grid() const { return grid_; }
  int n() const { return model_.n(); }
  int nodes() const { return grid_.size(); }
  const MatrixXd& positions() const { return pos_; }
  const MatrixXd& winding() const { return winding_; }
  const FirstFundamental& first() const { return ff_; }
  const std::vector<Frame>& frames() const { return frames_; }
  const SpectralDiff& diff() const { return diff_; }
  double legendrian_tol() const { return leg_tol_; }
  void set_legendrian_tol(double t) { leg_tol_ = t; }

  std::map<std::string, std::string> metadata;

  /// Same grid/model/winding, new positions.
  DiscreteLegendrian with_positions(MatrixXd p) const {
    DiscreteLegendrian out(model_, grid_, std::move(p), winding_);
    out.metadata = metadata;
    out.leg_tol_ = leg_tol_;
    return out;
  }

  /// Chart point at a node with periodic coordinates wrapped.
  ChartPoint point(int node) const {
    VectorXd c = pos_.col(node);
    if (model_.embedded()) c /= c.norm();
    return make_chart_point(model_, c);
  }

  /// Spectral derivative of coordinate a along axis (winding aware).
  VectorXd coord_diff(int a, int axis, int order = 1) const {
    std::array<double, 2> w{0.0, 0.0};
    for (int k = 0; k < grid_.dims(); ++k) w[k] = winding_(a, k);
    return diff_.diff_wound(pos_.row(a).transpose(), w, axis, order);
  }

  /// Gradient components g^{ij} d_j f (coefficients in the tangent basis).
  MatrixXd gradient_coeffs(const VectorXd& f) const {
    const int n = this->n();
    MatrixXd df(n, nodes());
    for (int i = 0; i < n; ++i) df.row(i) = diff_.diff(f, i).transpose();
    MatrixXd up(n, nodes());
    for (int x = 0; x < nodes(); ++x)
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += ff_.ginv(i * n + j, x) * df(j, x);
        up(i, x) = s;
      }
    return up;
  }

  /// Laplace-Beltrami (analyst's sign) of a scalar: (1/sqrt g) d_i(sqrt g g^{ij} d_j f).
  VectorXd laplacian(const VectorXd& f) const {
    const int n = this->n();
    const MatrixXd up = gradient_coeffs(f);
    VectorXd sg = ff_.dmu / grid_.weight();
    VectorXd out = VectorXd::Zero(nodes());
    for (int i = 0; i < n; ++i) {
      VectorXd flux = sg.cwiseProduct(up.row(i).transpose());
      out += diff_.diff(flux, i);
    }
    return out.cwiseQuotient(sg);
  }

  /// Integral of a nodal function against d mu.
  double integrate(const VectorXd& f) const { return f.dot(ff_.dmu); }

 private:
  void build_cache() {
    const int n = this->n();
    const int D = model_.coord_dim();
    const int N = nodes();
    diff_ = SpectralDiff(grid_);
    leg_tol_ = default_legendrian_tol(n);
    frames_.resize(N);
    for (int x = 0; x < N; ++x) frames_[x] = model_.frame_raw(pos_.col(x));
    for (int i = 0; i < n; ++i) {
      ff_.tangent[i].resize(D, N);
      for (int a = 0; a < D; ++a) ff_.tangent[i].row(a) = coord_diff(a, i).transpose();
      ff_.normal[i].resize(D, N);
      for (int x = 0; x < N; ++x) ff_.normal[i].col(x) = frames_[x].J * ff_.tangent[i].col(x);
    }
    ff_.g.resize(n * n, N);
    ff_.ginv.resize(n * n, N);
    ff_.dmu.resize(N);
    ff_.legendrian_residual = 0.0;
    for (int x = 0; x < N; ++x) {
      const Frame& f = frames_[x];
      Eigen::Matrix2d gm = Eigen::Matrix2d::Identity();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          gm(i, j) = ff_.tangent[i].col(x).dot(f.g * ff_.tangent[j].col(x));
      for (int i = 0; i < n; ++i)
        ff_.legendrian_residual =
            std::max(ff_.legendrian_residual, std::abs(f.lambda.dot(ff_.tangent[i].col(x))));
      const double det = gm.topLeftCorner(n, n).determinant();
      if (!(det >= 1e-14))
        throw DegenerateMetric("det g_ij = " + std::to_string(det) + " at node " + std::to_string(x));
      const Eigen::MatrixXd gi = gm.topLeftCorner(n, n).inverse();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          ff_.g(i * n + j, x) = gm(i, j);
          ff_.ginv(i * n + j, x) = gi(i, j);
        }
      ff_.dmu(x) = std::sqrt(det) * grid_.weight();
    }
    ff_.vol = ff_.dmu.sum();
  }

  SasakianModel model_;
  PeriodicGrid grid_;
  MatrixXd pos_;
  MatrixXd winding_;
  SpectralDiff diff_{PeriodicGrid()};
  FirstFundamental ff_;
  std::vector<Frame> frames_;
  double leg_tol_ = 1e-7;
};

inline const FirstFundamental& first_fundamental(const DiscreteLegendrian& L) { return L.first(); }

/// Induced Christoffel symbols G^k_{ij} from spectral derivatives of g_ij;
/// row (k*n+i)*n+j per node.
inline MatrixXd induced_christoffels(const DiscreteLegendrian& L) {
  const int n = L.n();
  const int N = L.nodes();
  const auto& ff = L.first();
  std::vector<MatrixXd> dg(n, MatrixXd(n * n, N));  // dg[c](i*n+j, x) = d_c g_ij
  for (int c = 0; c < n; ++c)
    for (int q = 0; q < n * n; ++q) dg[c].row(q) = L.diff().diff(ff.g.row(q).transpose(), c).transpose();
  MatrixXd G = MatrixXd::Zero(n * n * n, N);
  for (int x = 0; x < N; ++x)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = 0.0;
          for (int l = 0; l < n; ++l)
            v += ff.ginv(k * n + l, x) * (dg[i](j * n + l, x) + dg[j](i * n + l, x) - dg[l](i * n + j, x));
          G((k * n + i) * n + j, x) = 0.5 * v;
        }
  return G;
}

inline SecondFundamentalData second_fundamental(const DiscreteLegendrian& L) {
  const int n = L.n();
  const int D = L.model().coord_dim();
  const int N = L.nodes();
  const auto& ff = L.first();
  const auto& sd = L.diff();
  SecondFundamentalData s;

  const MatrixXd Gind = induced_christoffels(L);

  s.A.assign(n * n, MatrixXd::Zero(D, N));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      MatrixXd& A = s.A[i * n + j];
      for (int a = 0; a < D; ++a) {
        // second derivative of the coordinate (linear winding drops out)
        std::array<double, 2> w{0.0, 0.0};
        for (int k = 0; k < n; ++k) w[k] = L.winding()(a, k);
        VectorXd fa = L.positions().row(a).transpose();
        if (w[0] != 0.0 || w[1] != 0.0)
          for (int x = 0; x < N; ++x)
            for (int k = 0; k < n; ++k) fa(x) -= w[k] * L.grid().theta(x, k);
        A.row(a) = sd.diff2(fa, i, j).transpose();
      }
      if (j != i) s.A[j * n + i] = A;  // filled below symmetrically
    }

  s.h = MatrixXd::Zero(n * n * n, N);
  s.H = MatrixXd::Zero(n, N);
  s.A_sq = VectorXd::Zero(N);
  s.H_sq = VectorXd::Zero(N);
  for (int x = 0; x < N; ++x) {
    const VectorXd p = L.positions().col(x);
    const Tensor<3> G = L.model().christoffel_raw(p);
    const Frame& f = L.frames()[x];
    Eigen::Matrix2d gi = Eigen::Matrix2d::Identity();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) gi(i, j) = ff.ginv(i * n + j, x);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        VectorXd a = s.A[i * n + j].col(x);
        const VectorXd Fi = ff.tangent[i].col(x), Fj = ff.tangent[j].col(x);
        for (int al = 0; al < D; ++al) {
          double v = 0.0;
          for (int be = 0; be < D; ++be)
            for (int ga = 0; ga < D; ++ga) v += G(al, be, ga) * Fi(be) * Fj(ga);
          a(al) += v;
        }
        for (int k = 0; k < n; ++k) a -= Gind((k * n + i) * n + j, x) * ff.tangent[k].col(x);
        s.A[i * n + j].col(x) = a;
        if (j != i) s.A[j * n + i].col(x) = a;
      }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        s.reeb_residual = std::max(s.reeb_residual, std::abs(f.lambda.dot(s.A[i * n + j].col(x))));
        for (int k = 0; k < n; ++k) {
          // h_ijk = -omega_{ab} F_k^a A_ij^b
          s.h((i * n + j) * n + k, x) = -ff.tangent[k].col(x).dot(f.omega * s.A[i * n + j].col(x));
        }
      }
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) v += gi(i, k) * s.h((i * n + j) * n + k, x);
      s.H(j, x) = v;
    }
    double a2 = 0.0, h2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            a2 += gi(i, k) * gi(j, l) * s.A[i * n + j].col(x).dot(f.g * s.A[k * n + l].col(x));
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) h2 += gi(j, l) * s.H(j, x) * s.H(l, x);
    s.A_sq(x) = a2;
    s.H_sq(x) = h2;
    // total symmetry of h
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double v = s.h((i * n + j) * n + k, x);
          const double perms[] = {s.h((i * n + k) * n + j, x), s.h((j * n + i) * n + k, x),
                                  s.h((j * n + k) * n + i, x), s.h((k * n + i) * n + j, x),
                                  s.h((k * n + j) * n + i, x)};
          for (double q : perms) s.symmetry_residual = std::max(s.symmetry_residual, std::abs(v - q));
        }
  }
  s.max_A_sq = s.A_sq.maxCoeff();
  s.max_H_sq = s.H_sq.maxCoeff();
  return s;
}

// ---- Legendrian deformations --------------------------------------------------

/// Deformation vector field X = J grad f + 2 f T and its isotropic 1-form theta = df/2.
struct DeformationField {
  VectorXd f;
  MatrixXd X;      // D x nodes
  MatrixXd theta;  // n x nodes
};

inline DeformationField make_deformation_field(const DiscreteLegendrian& L, const VectorXd& f) {
  const int n = L.n();
  DeformationField d;
  d.f = f;
  const MatrixXd up = L.gradient_coeffs(f);
  d.X = MatrixXd::Zero(L.model().coord_dim(), L.nodes());
  for (int x = 0; x < L.nodes(); ++x) {
    VectorXd v = 2.0 * f(x) * L.frames()[x].reeb;
    for (int i = 0; i < n; ++i) v += up(i, x) * L.first().normal[i].col(x);
    d.X.col(x) = v;
  }
  d.theta.resize(n, L.nodes());
  for (int i = 0; i < n; ++i) d.theta.row(i) = 0.5 * L.diff().diff(f, i).transpose();
  return d;
}

struct ProjectionResult {
  DiscreteLegendrian L;
  double correction = 0.0;       // max |c|
  double residual_before = 0.0;
  double residual_after = 0.0;
  int sweeps = 0;
};

/// Cycle integrals of a 1-form r (n x nodes) along each grid axis; for tori
/// the maximum absolute line integral over parallel cycles is reported.
inline std::vector<double> cycle_integrals(const PeriodicGrid& grid, const MatrixXd& r,
                                           bool max_abs_over_lines = false) {
  std::vector<double> out(grid.dims(), 0.0);
  for (int axis = 0; axis < grid.dims(); ++axis) {
    const int Na = grid.extent(axis);
    const int lines = grid.size() / Na;
    double acc = 0.0, worst = 0.0;
    for (int l = 0; l < lines; ++l) {
      double s = 0.0;
      for (int i = 0; i < Na; ++i) {
        const int node = grid.dims() == 1 ? i : (axis == 0 ? grid.index(i, l) : grid.index(l, i));
        s += r(axis, node);
      }
      s *= grid.spacing(axis);
      acc += s;
      if (std::abs(s) > std::abs(worst)) worst = s;
    }
    out[axis] = max_abs_over_lines ? worst : acc / lines;
  }
  return out;
}

/// Reeb-direction projection onto the Legendrian constraint: each node is moved
/// by the exact Reeb flow by c(x) where grad c = -lambda(F_i) in least squares.
inline ProjectionResult project_legendrian(const DiscreteLegendrian& L0,
                                           std::optional<double> tol = std::nullopt,
                                           double recoverable = 1e-2) {
  const double leg_tol = tol.value_or(L0.legendrian_tol());
  const int n = L0.n();
  ProjectionResult res{L0};
  res.residual_before = L0.first().legendrian_residual;
  if (res.residual_before > recoverable)
    throw ProjectionFailed("Legendrian residual " + std::to_string(res.residual_before) +
                           " exceeds the recoverable bound");
  const double closure_tol = 1e-9 * L0.first().vol;
  VectorXd total = VectorXd::Zero(L0.nodes());
  for (int sweep = 0; sweep < 5; ++sweep) {
    const DiscreteLegendrian& L = res.L;
    if (L.first().legendrian_residual < 1e-3 * leg_tol) break;
    MatrixXd r(n, L.nodes());
    for (int i = 0; i < n; ++i)
      for (int x = 0; x < L.nodes(); ++x) r(i, x) = L.frames()[x].lambda.dot(L.first().tangent[i].col(x));
    const auto hol = cycle_integrals(L.grid(), r, true);
    for (double h : hol)
      if (std::abs(h) > closure_tol)
        throw HolonomyObstruction("cycle integral of lambda = " + std::to_string(h) +
                                  " exceeds closure tolerance " + std::to_string(closure_tol));
    std::vector<VectorXd> rr(n);
    for (int i = 0; i < n; ++i) rr[i] = -r.row(i).transpose().array() + r.row(i).mean();
    const VectorXd c = L.diff().integrate_gradient(rr);
    MatrixXd P = L.positions();
    for (int x = 0; x < L.nodes(); ++x) P.col(x) = L.model().reeb_shift(P.col(x), c(x));
    total += c;
    res.L = L.with_positions(std::move(P));
    res.sweeps = sweep + 1;
  }
  res.correction = total.cwiseAbs().maxCoeff();
  res.residual_after = res.L.first().legendrian_residual;
  if (res.residual_after > leg_tol)
    throw ProjectionFailed("post-projection residual " + std::to_string(res.residual_after) +
                           " above tolerance " + std::to_string(leg_tol));
  return res;
}

/// Integrates dF/ds = J grad f + 2 f T from 0 to s (RK4, f fixed on grid labels),
/// then projects onto the Legendrian constraint.
inline DiscreteLegendrian legendrian_deform(const DiscreteLegendrian& L, const VectorXd& f, double s,
                                            int steps = 0) {
  if (s == 0.0) return L;
  if (steps <= 0) steps = std::max(16, static_cast<int>(std::ceil(std::abs(s) / 0.002)));
  const double ds = s / steps;
  auto rhs = [&](const MatrixXd& P) {
    const DiscreteLegendrian Ls = L.with_positions(P);
    return make_deformation_field(Ls, f).X;
  };
  MatrixXd P = L.positions();
  for (int k = 0; k < steps; ++k) {
    const MatrixXd k1 = rhs(P);
    const MatrixXd k2 = rhs(P + 0.5 * ds * k1);
    const MatrixXd k3 = rhs(P + 0.5 * ds * k2);
    const MatrixXd k4 = rhs(P + ds * k3);
    P += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (L.model().embedded()) P.colwise().normalize();
  }
  return project_legendrian(L.with_positions(std::move(P))).L;
}

/// Sup-norm coordinate distance between two immersions on the same grid.
inline double sup_distance(const DiscreteLegendrian& a, const DiscreteLegendrian& b) {
  return (a.positions() - b.positions()).cwiseAbs().maxCoeff();
}

// ---- built-in families ----------------------------------------------------------

struct Parametrization {
  std::string family;             // great_circle | clifford_torus | heisenberg_lemniscate |
                                  // hyperbolic_geodesic | heisenberg_circle
  double amplitude = 0.0;         // s of the Legendrian perturbation
  std::string potential = "cos";  // cos | sin | cos_sum
  int mode = 1;
  bool central_quotient = false;  // heisenberg_circle only: quotient z ~ z + pi
};

/// Perturbation potential evaluated on grid labels.
inline VectorXd potential_on_grid(const PeriodicGrid& grid, const std::string& kind, int mode) {
  VectorXd f(grid.size());
  for (int x = 0; x < grid.size(); ++x) {
    const double t0 = grid.theta(x, 0);
    const double t1 = grid.dims() == 2 ? grid.theta(x, 1) : 0.0;
    if (kind == "cos")
      f(x) = std::cos(mode * t0);
    else if (kind == "sin")
      f(x) = std::sin(mode * t0);
    else if (kind == "cos_sum")
      f(x) = std::cos(mode * t0) + (grid.dims() == 2 ? std::cos(mode * t1) : 0.0);
    else
      throw SchemaError("unknown perturbation potential '" + kind + "'");
  }
  return f;
}

inline DiscreteLegendrian build_immersion(const SasakianModel& model, const Parametrization& par,
                                          std::vector<int> resolution) {
  const int n = model.n();
  if (static_cast<int>(resolution.size()) == 1 && n == 2) resolution.push_back(resolution[0]);
  if (static_cast<int>(resolution.size()) != n)
    throw SchemaError("resolution must have " + std::to_string(n) + " entries for this model");
  PeriodicGrid grid(resolution);
  const int N = grid.size();
  const int D = model.coord_dim();
  MatrixXd P(D, N);
  MatrixXd W = MatrixXd::Zero(D, n);
  const double pi = std::numbers::pi;
  auto require = [&](ModelKind k) {
    if (model.kind() != k)
      throw SchemaError("family '" + par.family + "' is not defined in model " + model.id());
  };
  if (par.family == "great_circle") {
    require(ModelKind::SphereS3);
    for (int x = 0; x < N; ++x) {
      const double t = grid.theta(x, 0);
      P.col(x) << std::cos(t), 0.0, std::sin(t), 0.0;
    }
  } else if (par.family == "clifford_torus") {
    require(ModelKind::SphereS5);
    const double r = 1.0 / std::sqrt(3.0);
    for (int x = 0; x < N; ++x) {
      const double a = grid.theta(x, 0), b = grid.theta(x, 1);
      P.col(x) << r * std::cos(a), r * std::sin(a), r * std::cos(b), r * std::sin(b),
          r * std::cos(a + b), -r * std::sin(a + b);
    }
  } else if (par.family == "heisenberg_lemniscate") {
    // (x, y) = (sin t, sin t cos t), z' = y x' gives z = -cos^3 t / 3 (zero holonomy)
    auto lem = [](double t, double& x, double& y, double& z) {
      x = std::sin(t);
      y = std::sin(t) * std::cos(t);
      z = -std::pow(std::cos(t), 3) / 3.0;
    };
    if (model.kind() == ModelKind::HeisenbergR3) {
      for (int x = 0; x < N; ++x) {
        double a, b, c;
        lem(grid.theta(x, 0), a, b, c);
        P.col(x) << a, b, c;
      }
    } else {
      require(ModelKind::HeisenbergR5);
      for (int x = 0; x < N; ++x) {
        double a1, b1, c1, a2, b2, c2;
        lem(grid.theta(x, 0), a1, b1, c1);
        lem(grid.theta(x, 1), a2, b2, c2);
        P.col(x) << a1, b1, a2, b2, c1 + c2;
      }
    }
  } else if (par.family == "hyperbolic_geodesic") {
    require(ModelKind::HyperbolicCylinder3);
    for (int x = 0; x < N; ++x) P.col(x) << 0.0, grid.theta(x, 0), 0.0;
    W(1, 0) = 1.0;
  } else if (par.family == "heisenberg_circle") {
    require(ModelKind::HeisenbergR3);
    // (cos t, sin t), z' = y x' = -sin^2 t: z = -t/2 + sin(2t)/4, holonomy -pi per turn.
    if (!par.central_quotient)
      throw NotClosable("round circle encloses signed area pi: horizontal lift has holonomy -pi");
    for (int x = 0; x < N; ++x) {
      const double t = grid.theta(x, 0);
      P.col(x) << std::cos(t), std::sin(t), -t / 2.0 + std::sin(2.0 * t) / 4.0;
    }
    W(2, 0) = -0.5;
  } else {
    throw SchemaError("unknown immersion family '" + par.family + "'");
  }
  DiscreteLegendrian L(model, grid, std::move(P), std::move(W));
  L.metadata["family"] = par.family;
  if (L.first().legendrian_residual > L.legendrian_tol())
    throw NotClosable("initial lift is not Legendrian (residual " +
                      std::to_string(L.first().legendrian_residual) + ")");
  if (par.amplitude != 0.0) {
    const VectorXd f = potential_on_grid(grid, par.potential, par.mode);
    if (L.diff().top_third_energy_fraction(f) > 1e-8)
      throw ResolutionTooLow("perturbation potential is not spectrally resolved");
    auto meta = L.metadata;
    try {
      L = legendrian_deform(L, f, par.amplitude);
    } catch (const ProjectionFailed& e) {
      // the deformed curve no longer closes up as a Legendrian: bad input, not a solver fault
      throw NotClosable("amplitude " + std::to_string(par.amplitude) + " too large: " + e.what());
    }
    L.metadata = meta;
  }
  L.metadata["amplitude"] = std::to_string(par.amplitude);
  L.metadata["potential"] = par.potential;
  L.metadata["mode"] = std::to_string(par.mode);
  return L;
}

}  // namespace lmcf
