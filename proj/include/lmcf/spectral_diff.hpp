#pragma once

// Periodic tensor-product grids (1D for curves, 2D for tori) and Fourier
// differentiation along each axis.
//
// Even-N convention: the first derivative drops the Nyquist mode (so the
// discrete operator is real and skew), the second derivative keeps it with
// symbol -(N/2)^2.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

#include "lmcf/errors.hpp"

namespace lmcf {

class PeriodicGrid {
 public:
  PeriodicGrid() = default;
  /// dims = 1 (shape {N}) or 2 (shape {N1, N2}); nodes are row-major.
  explicit PeriodicGrid(std::vector<int> shape) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 2) throw ResolutionTooLow("grid must be 1D or 2D");
    for (int n : shape_)
      if (n < 16) throw ResolutionTooLow("resolution " + std::to_string(n) + " < 16");
  }

  int dims() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int extent(int axis) const { return shape_[axis]; }
  int size() const {
    int s = 1;
    for (int n : shape_) s *= n;
    return s;
  }
  double spacing(int axis) const { return 2.0 * std::numbers::pi / shape_[axis]; }
  /// Quadrature weight of one node (product of spacings).
  double weight() const {
    double w = 1.0;
    for (int a = 0; a < dims(); ++a) w *= spacing(a);
    return w;
  }
  int index(int i, int j = 0) const { return dims() == 1 ? i : i * shape_[1] + j; }
  std::array<int, 2> multi(int node) const {
    if (dims() == 1) return {node, 0};
    return {node / shape_[1], node % shape_[1]};
  }
  double theta(int node, int axis) const { return spacing(axis) * multi(node)[axis]; }

  bool operator==(const PeriodicGrid& o) const { return shape_ == o.shape_; }

 private:
  std::vector<int> shape_;
};

/// Fourier differentiation on a PeriodicGrid. Not thread-safe (FFT plan cache);
/// use one instance per thread.
class SpectralDiff {
 public:
  explicit SpectralDiff(const PeriodicGrid& grid) : grid_(grid) {}

  const PeriodicGrid& grid() const { return grid_; }

  /// Derivative of order 1 or 2 along axis.
  Eigen::VectorXd diff(const Eigen::VectorXd& f, int axis, int order = 1) const {
    return apply(f, axis, [order](int k, int N) -> std::complex<double> {
      const bool nyq = (N % 2 == 0) && (std::abs(k) == N / 2);
      if (order == 1) return nyq ? 0.0 : std::complex<double>(0.0, k);
      return std::complex<double>(-double(k) * k, 0.0);
    });
  }

  /// Mixed derivative d_0 d_1 (tori).
  Eigen::VectorXd diff_mixed(const Eigen::VectorXd& f) const { return diff(diff(f, 0, 1), 1, 1); }

  /// Partial derivative d_a d_b.
  Eigen::VectorXd diff2(const Eigen::VectorXd& f, int a, int b) const {
    if (a == b) return diff(f, a, 2);
    return diff_mixed(f);
  }

  /// Derivative of a function with linear growth f(theta + 2 pi e_axis) = f + 2 pi w_axis.
  Eigen::VectorXd diff_wound(const Eigen::VectorXd& f, const std::array<double, 2>& w, int axis,
                             int order = 1) const {
    if (w[0] == 0.0 && w[1] == 0.0) return diff(f, axis, order);
    Eigen::VectorXd per = f;
    for (int i = 0; i < grid_.size(); ++i)
      for (int a = 0; a < grid_.dims(); ++a) per(i) -= w[a] * grid_.theta(i, a);
    Eigen::VectorXd d = diff(per, axis, order);
    if (order == 1) d.array() += w[axis];
    return d;
  }

  /// Fraction of spectral energy in the top third of wavenumbers (smoothness gauge).
  double top_third_energy_fraction(const Eigen::VectorXd& f) const {
    double top = 0.0, total = 0.0;
    for_each_mode(f, [&](int k0, int k1, int N0, int N1, double e) {
      total += e;
      const bool hi = 3 * std::abs(k0) > N0 || (grid_.dims() == 2 && 3 * std::abs(k1) > N1);
      if (hi) top += e;
    });
    return total > 0 ? top / total : 0.0;
  }

  /// Solve grad c = r (r: per-axis components, assumed mean-zero and curl-free) for
  /// mean-zero c in least squares; returns c. For 2D the Poisson form
  /// Delta c = div r is used, which is the normal equation of the LSQ problem.
  Eigen::VectorXd integrate_gradient(const std::vector<Eigen::VectorXd>& r) const {
    const int dims = grid_.dims();
    if (dims == 1) {
      return apply(r[0], 0, [](int k, int N) -> std::complex<double> {
        const bool nyq = (N % 2 == 0) && (std::abs(k) == N / 2);
        if (k == 0 || nyq) return 0.0;
        return std::complex<double>(0.0, -1.0 / k);
      });
    }
    const int N0 = grid_.extent(0), N1 = grid_.extent(1);
    std::vector<std::vector<std::complex<double>>> R(2);
    for (int a = 0; a < 2; ++a) R[a] = fft2(r[a]);
    std::vector<std::complex<double>> C(N0 * N1);
    for (int i = 0; i < N0; ++i)
      for (int j = 0; j < N1; ++j) {
        const int k0 = wavenumber(i, N0), k1 = wavenumber(j, N1);
        const double kk0 = (N0 % 2 == 0 && std::abs(k0) == N0 / 2) ? 0.0 : k0;
        const double kk1 = (N1 % 2 == 0 && std::abs(k1) == N1 / 2) ? 0.0 : k1;
        const double den = kk0 * kk0 + kk1 * kk1;
        const int id = i * N1 + j;
        if (den == 0.0) {
          C[id] = 0.0;
          continue;
        }
        // c_hat = (-i k . r_hat) / |k|^2
        C[id] = std::complex<double>(0.0, -1.0) * (kk0 * R[0][id] + kk1 * R[1][id]) / den;
      }
    return ifft2_real(C);
  }

 private:
  static int wavenumber(int i, int N) { return i <= N / 2 ? i : i - N; }

  template <typename Symbol>
  Eigen::VectorXd apply(const Eigen::VectorXd& f, int axis, Symbol symbol) const {
    const int dims = grid_.dims();
    Eigen::VectorXd out(f.size());
    const int N = grid_.extent(axis);
    const int other = dims == 1 ? 1 : grid_.extent(1 - axis);
    std::vector<std::complex<double>> line(N), spec(N), back(N);
    std::vector<std::complex<double>> sym(N);
    for (int i = 0; i < N; ++i) sym[i] = symbol(wavenumber(i, N), N);
    for (int o = 0; o < other; ++o) {
      auto node = [&](int i) {
        if (dims == 1) return i;
        return axis == 0 ? grid_.index(i, o) : grid_.index(o, i);
      };
      for (int i = 0; i < N; ++i) line[i] = f(node(i));
      fft_.fwd(spec, line);
      for (int i = 0; i < N; ++i) spec[i] *= sym[i];
      fft_.inv(back, spec);
      for (int i = 0; i < N; ++i) out(node(i)) = back[i].real();
    }
    return out;
  }

  std::vector<std::complex<double>> fft2(const Eigen::VectorXd& f) const {
    const int N0 = grid_.extent(0), N1 = grid_.extent(1);
    std::vector<std::complex<double>> A(N0 * N1);
    std::vector<std::complex<double>> line(N1), spec(N1), col(N0), cspec(N0);
    for (int i = 0; i < N0; ++i) {
      for (int j = 0; j < N1; ++j) line[j] = f(i * N1 + j);
      fft_.fwd(spec, line);
      for (int j = 0; j < N1; ++j) A[i * N1 + j] = spec[j];
    }
    for (int j = 0; j < N1; ++j) {
      for (int i = 0; i < N0; ++i) col[i] = A[i * N1 + j];
      fft_.fwd(cspec, col);
      for (int i = 0; i < N0; ++i) A[i * N1 + j] = cspec[i];
    }
    return A;
  }

  Eigen::VectorXd ifft2_real(std::vector<std::complex<double>> A) const {
    const int N0 = grid_.extent(0), N1 = grid_.extent(1);
    std::vector<std::complex<double>> line(N1), spec(N1), col(N0), cspec(N0);
    for (int j = 0; j < N1; ++j) {
      for (int i = 0; i < N0; ++i) cspec[i] = A[i * N1 + j];
      fft_.inv(col, cspec);
      for (int i = 0; i < N0; ++i) A[i * N1 + j] = col[i];
    }
    Eigen::VectorXd out(N0 * N1);
    for (int i = 0; i < N0; ++i) {
      for (int j = 0; j < N1; ++j) spec[j] = A[i * N1 + j];
      fft_.inv(line, spec);
      for (int j = 0; j < N1; ++j) out(i * N1 + j) = line[j].real();
    }
    return out;
  }

  template <typename Fn>
  void for_each_mode(const Eigen::VectorXd& f, Fn fn) const {
    if (grid_.dims() == 1) {
      const int N = grid_.extent(0);
      std::vector<std::complex<double>> line(N), spec(N);
      for (int i = 0; i < N; ++i) line[i] = f(i);
      fft_.fwd(spec, line);
      for (int i = 0; i < N; ++i) fn(wavenumber(i, N), 0, N, 1, std::norm(spec[i]));
      return;
    }
    const auto A = fft2(f);
    const int N0 = grid_.extent(0), N1 = grid_.extent(1);
    for (int i = 0; i < N0; ++i)
      for (int j = 0; j < N1; ++j)
        fn(wavenumber(i, N0), wavenumber(j, N1), N0, N1, std::norm(A[i * N1 + j]));
  }

  PeriodicGrid grid_;
  mutable Eigen::FFT<double> fft_;
};

}  // namespace lmcf
