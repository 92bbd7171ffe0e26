#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mslkit/errors.hpp"

namespace mslkit {

using Shape = std::vector<std::size_t>;

namespace detail {

inline std::string shape_string(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

inline std::size_t shape_product(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + ": non-finite entry");
}

}  // namespace detail

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw InvalidArgument("Matrix: data length " + std::to_string(data_.size()) + " != " +
                            std::to_string(rows_) + "x" + std::to_string(cols_));
    detail::require_finite(data_, "Matrix");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  // First `cols` columns of the n x n identity.
  static Matrix identity_columns(std::size_t n, std::size_t cols) {
    Matrix m(n, cols);
    for (std::size_t i = 0; i < std::min(n, cols); ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  // Leading `n` columns.
  Matrix left_columns(std::size_t n) const {
    if (n > cols_) throw InvalidArgument("Matrix::left_columns: too many columns requested");
    Matrix out(rows_, n);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < n; ++c) out(r, c) = (*this)(r, c);
    return out;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw InvalidArgument("matrix product: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("matrix difference: shape mismatch");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.data().size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
  return c;
}

/// Dense order-N tensor of doubles. Storage is flat with the last mode
/// index varying fastest. Modes are 1-based in the public API.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(detail::shape_product(shape_), 0.0);
  }

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != detail::shape_product(shape_))
      throw InvalidArgument("Tensor: data length " + std::to_string(data_.size()) + " does not match shape " +
                            detail::shape_string(shape_));
    detail::require_finite(data_, "Tensor");
  }

  std::size_t order() const noexcept { return shape_.size(); }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t mode) const {
    check_mode(mode);
    return shape_[mode - 1];
  }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  // Zero-based multi-index access.
  double at(std::span<const std::size_t> index) const { return data_[offset(index)]; }
  double& at(std::span<const std::size_t> index) { return data_[offset(index)]; }

  void check_mode(std::size_t mode) const {
    if (mode < 1 || mode > shape_.size())
      throw InvalidArgument("mode " + std::to_string(mode) + " out of range for order-" +
                            std::to_string(shape_.size()) + " tensor");
  }

  // Same data viewed under a different shape of equal element count.
  Tensor reshaped(Shape shape) const {
    Tensor t;
    t.shape_ = std::move(shape);
    t.validate_shape();
    if (detail::shape_product(t.shape_) != data_.size())
      throw InvalidArgument("Tensor::reshaped: element count mismatch");
    t.data_ = data_;
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void validate_shape() const {
    if (shape_.empty()) throw InvalidArgument("Tensor: order must be >= 1");
    for (std::size_t d : shape_)
      if (d == 0) throw InvalidArgument("Tensor: every dimension must be >= 1");
  }

  std::size_t offset(std::span<const std::size_t> index) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < shape_.size(); ++i) off = off * shape_[i] + index[i];
    return off;
  }

  Shape shape_;
  std::vector<double> data_;
};

namespace detail {

// For mode k (1-based): product of dims before k and after k. With
// last-fastest storage the element (outer, i_k, inner) sits at
// (outer * I_k + i_k) * inner_size + inner.
struct ModeSplit {
  std::size_t outer;
  std::size_t dim;
  std::size_t inner;
};

inline ModeSplit split_at(const Shape& shape, std::size_t mode) {
  ModeSplit s{1, shape[mode - 1], 1};
  for (std::size_t i = 0; i + 1 < mode; ++i) s.outer *= shape[i];
  for (std::size_t i = mode; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace detail

/// k-mode unfolding X^(k): rows index mode k, and the column of element
/// (i_1..i_N) is j = 1 + sum_{l != k} (i_l - 1) prod_{o > l, o != k} I_o,
/// i.e. the remaining modes enumerated with the later modes fastest.
inline Matrix unfold(const Tensor& t, std::size_t mode) {
  t.check_mode(mode);
  const auto s = detail::split_at(t.shape(), mode);
  Matrix m(s.dim, s.outer * s.inner);
  const auto src = t.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.dim; ++i) {
      const double* from = src.data() + (o * s.dim + i) * s.inner;
      double* to = m.data().data() + i * m.cols() + o * s.inner;
      std::copy(from, from + s.inner, to);
    }
  return m;
}

/// Inverse of unfold.
inline Tensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
  Tensor t(shape);
  t.check_mode(mode);
  const auto s = detail::split_at(shape, mode);
  if (m.rows() != s.dim || m.cols() != s.outer * s.inner)
    throw InvalidArgument("fold: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          " matrix does not fold into shape " + detail::shape_string(shape) + " at mode " +
                          std::to_string(mode));
  auto dst = t.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.dim; ++i) {
      const double* from = m.data().data() + i * m.cols() + o * s.inner;
      std::copy(from, from + s.inner, dst.data() + (o * s.dim + i) * s.inner);
    }
  return t;
}

/// k-mode product Y = X x_k U, with Y[.., i, ..] = sum_j X[.., j, ..] U(i, j).
inline Tensor mode_product(const Tensor& t, std::size_t mode, const Matrix& u) {
  t.check_mode(mode);
  const auto s = detail::split_at(t.shape(), mode);
  if (u.cols() != s.dim)
    throw InvalidArgument("mode_product: matrix has " + std::to_string(u.cols()) + " columns but mode " +
                          std::to_string(mode) + " has dimension " + std::to_string(s.dim));
  Shape out_shape = t.shape();
  out_shape[mode - 1] = u.rows();
  Tensor out(out_shape);
  const auto src = t.data();
  auto dst = out.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < u.rows(); ++i) {
      double* y = dst.data() + (o * u.rows() + i) * s.inner;
      for (std::size_t j = 0; j < s.dim; ++j) {
        const double w = u(i, j);
        if (w == 0.0) continue;
        const double* x = src.data() + (o * s.dim + j) * s.inner;
        for (std::size_t n = 0; n < s.inner; ++n) y[n] += w * x[n];
      }
    }
  detail::require_finite(out.data(), "mode_product result");
  return out;
}

/// Stacks M equally shaped tensors into one of order N+1 whose last mode
/// indexes the sample.
inline Tensor stack(std::span<const Tensor> samples) {
  if (samples.empty()) throw InvalidArgument("stack: empty sample list");
  const Shape& base = samples.front().shape();
  Shape shape = base;
  shape.push_back(samples.size());
  const std::size_t per = samples.front().size();
  std::vector<double> data(per * samples.size());
  for (std::size_t m = 0; m < samples.size(); ++m) {
    if (samples[m].shape() != base)
      throw InvalidArgument("stack: sample " + std::to_string(m) + " has shape " +
                            detail::shape_string(samples[m].shape()) + ", expected " + detail::shape_string(base));
    const auto src = samples[m].data();
    for (std::size_t e = 0; e < per; ++e) data[e * samples.size() + m] = src[e];
  }
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace mslkit
