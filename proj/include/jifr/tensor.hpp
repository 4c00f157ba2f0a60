#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace jifr {

/// Dense row-major matrix. Only what the model needs: row views, fill,
/// and the handful of kernels below.
template <class Real>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Real value = Real(0))
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Real> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<Real>& data() { return data_; }
  const std::vector<Real>& data() const { return data_; }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

template <class Real, class A, class B>
Real dot(std::span<A> a, std::span<B> b) {
  assert(a.size() == b.size());
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<Real>(a[i]) * static_cast<Real>(b[i]);
  return s;
}

/// out = m * x, where x may be split into two concatenated pieces [x1, x2].
template <class Real, class X1, class X2>
void matvec_concat(const Matrix<Real>& m, std::span<X1> x1, std::span<X2> x2, std::span<Real> out) {
  assert(m.cols() == x1.size() + x2.size() && out.size() == m.rows());
  const std::size_t n1 = x1.size();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto w = m.row(r);
    Real s = 0;
    for (std::size_t c = 0; c < n1; ++c) s += w[c] * static_cast<Real>(x1[c]);
    for (std::size_t c = 0; c < x2.size(); ++c) s += w[n1 + c] * static_cast<Real>(x2[c]);
    out[r] = s;
  }
}

template <class Real, class X>
void matvec(const Matrix<Real>& m, std::span<X> x, std::span<Real> out) {
  matvec_concat<Real, X, const Real>(m, x, std::span<const Real>{}, out);
}

/// m += g * [x1, x2]^T
template <class Real, class X1, class X2>
void add_outer_concat(Matrix<Real>& m, std::span<const Real> g, std::span<X1> x1, std::span<X2> x2) {
  const std::size_t n1 = x1.size();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Real gr = g[r];
    if (gr == Real(0)) continue;
    auto w = m.row(r);
    for (std::size_t c = 0; c < n1; ++c) w[c] += gr * static_cast<Real>(x1[c]);
    for (std::size_t c = 0; c < x2.size(); ++c) w[n1 + c] += gr * static_cast<Real>(x2[c]);
  }
}

template <class Real, class X>
void add_outer(Matrix<Real>& m, std::span<const Real> g, std::span<X> x) {
  add_outer_concat<Real, X, const Real>(m, g, x, std::span<const Real>{});
}

/// out += m^T g
template <class Real>
void add_matvec_transposed(const Matrix<Real>& m, std::span<const Real> g, std::span<Real> out) {
  assert(out.size() == m.cols() && g.size() == m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Real gr = g[r];
    if (gr == Real(0)) continue;
    auto w = m.row(r);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += gr * w[c];
  }
}

template <class Real, class X>
void axpy(Real a, std::span<X> x, std::span<Real> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * static_cast<Real>(x[i]);
}

template <class Real>
Real squared_norm(std::span<const Real> a) {
  Real s = 0;
  for (Real v : a) s += v * v;
  return s;
}

}  // namespace jifr
