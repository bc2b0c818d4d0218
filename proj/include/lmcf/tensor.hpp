#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace lmcf {

/// Dense real tensor of fixed rank with uniform extent per slot.
///
/// Storage is row-major (last index fastest). All geometric tensors in the
/// library are small (extent <= 6), so a flat std::vector is enough.
template <std::size_t Rank>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(int extent, double fill = 0.0)
      : extent_(extent), data_(ipow(extent, Rank), fill) {}

  int extent() const { return extent_; }
  std::size_t size() const { return data_.size(); }

  template <typename... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }
  template <typename... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  Tensor& operator+=(const Tensor& o) {
    assert(o.data_.size() == data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    assert(o.data_.size() == data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

 private:
  static std::size_t ipow(int b, std::size_t e) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= static_cast<std::size_t>(b);
    return r;
  }
  template <typename... I>
  std::size_t offset(I... idx) const {
    std::size_t off = 0;
    ((off = off * static_cast<std::size_t>(extent_) + static_cast<std::size_t>(idx)), ...);
    return off;
  }

  int extent_ = 0;
  std::vector<double> data_;
};

/// Tensor of runtime rank; used only for iterated covariant derivatives of
/// the curvature tensor where the rank grows with the derivative order.
class DynTensor {
 public:
  DynTensor() = default;
  DynTensor(int extent, int rank) : extent_(extent), rank_(rank) {
    std::size_t n = 1;
    for (int i = 0; i < rank; ++i) n *= static_cast<std::size_t>(extent);
    data_.assign(n, 0.0);
  }
  int extent() const { return extent_; }
  int rank() const { return rank_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  std::size_t stride(int slot) const {
    std::size_t s = 1;
    for (int i = slot + 1; i < rank_; ++i) s *= static_cast<std::size_t>(extent_);
    return s;
  }

 private:
  int extent_ = 0;
  int rank_ = 0;
  std::vector<double> data_;
};

}  // namespace lmcf
