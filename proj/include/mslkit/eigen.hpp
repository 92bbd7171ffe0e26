#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "mslkit/errors.hpp"
#include "mslkit/tensor.hpp"

namespace mslkit {

/// Eigenpairs of a symmetric matrix. `values` are sorted descending and
/// column j of `vectors` is the unit eigenvector paired with values[j].
/// Each column is signed so that its largest-magnitude entry is
/// non-negative (first such entry on ties).
struct EigenResult {
  std::vector<double> values;
  Matrix vectors;
};

struct JacobiOptions {
  double off_diagonal_tolerance = 1e-12;  // relative to ||C||_F
  int max_sweeps = 100;
};

namespace detail {

inline void apply_sign_convention(Matrix& v) {
  for (std::size_t c = 0; c < v.cols(); ++c) {
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t r = 0; r < v.rows(); ++r) {
      const double a = std::abs(v(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (v(best, c) < 0.0)
      for (std::size_t r = 0; r < v.rows(); ++r) v(r, c) = -v(r, c);
  }
}

inline Matrix symmetrized(const Matrix& c, const char* who) {
  if (c.rows() != c.cols())
    throw InvalidArgument(std::string(who) + ": matrix is " + std::to_string(c.rows()) + "x" +
                          std::to_string(c.cols()) + ", expected square");
  if (c.rows() == 0) throw InvalidArgument(std::string(who) + ": empty matrix");
  const std::size_t n = c.rows();
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) asym = std::max(asym, std::abs(c(i, j) - c(j, i)));
  if (asym > 1e-9 * c.max_abs())
    throw InvalidArgument(std::string(who) + ": matrix is not symmetric (max asymmetry " + std::to_string(asym) +
                          ")");
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (c(i, j) + c(j, i));
  return a;
}

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace detail

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// Sweep order is fixed (row-major over the upper triangle) so the
/// result is a deterministic function of the input bytes.
inline EigenResult sym_eig(const Matrix& c, const JacobiOptions& opts = {}) {
  Matrix a = detail::symmetrized(c, "sym_eig");
  const std::size_t n = a.rows();
  Matrix v = Matrix::identity(n);

  const double threshold = opts.off_diagonal_tolerance * a.frobenius_norm();
  double off = detail::off_diagonal_norm(a);
  int sweep = 0;
  while (off > threshold) {
    if (sweep == opts.max_sweeps) {
      std::ostringstream msg;
      msg << "sym_eig: no convergence after " << opts.max_sweeps << " sweeps (off-diagonal residual " << off
          << ", threshold " << threshold << ")";
      throw NumericalError(msg.str());
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          const double np = cs * akp - sn * akq;
          const double nq = sn * akp + cs * akq;
          a(k, p) = np;
          a(p, k) = np;
          a(k, q) = nq;
          a(q, k) = nq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = cs * vkp - sn * vkq;
          v(k, q) = sn * vkp + cs * vkq;
        }
      }
    }
    off = detail::off_diagonal_norm(a);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenResult out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, j) = v(r, order[j]);
  }
  detail::apply_sign_convention(out.vectors);
  return out;
}

/// Smallest r with (sum of the first r values) >= fraction * (sum of all).
/// Values must be sorted descending; negatives down to -1e-10 * values[0]
/// are treated as zero. The comparison carries a 1e-12 relative slack so
/// that fraction 1.0 does not pick up round-off tails.
inline std::size_t energy_rank(std::span<const double> values, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InvalidArgument("energy_rank: fraction must lie in (0, 1], got " + std::to_string(fraction));
  if (values.empty()) throw InvalidArgument("energy_rank: empty spectrum");
  const double top = values[0];
  if (!(top > 0.0)) throw InvalidArgument("energy_rank: spectrum has no positive value");
  std::vector<double> clamped(values.begin(), values.end());
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < clamped.size(); ++i) {
    if (clamped[i] < 0.0) {
      if (clamped[i] < -1e-10 * top)
        throw InvalidArgument("energy_rank: significantly negative eigenvalue " + std::to_string(clamped[i]));
      clamped[i] = 0.0;
    }
    if (clamped[i] > 0.0) last_positive = i + 1;
  }
  const double total = std::accumulate(clamped.begin(), clamped.end(), 0.0);
  const double target = fraction * total - 1e-12 * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < clamped.size(); ++i) {
    cum += clamped[i];
    if (cum >= target) return std::min(i + 1, last_positive);
  }
  return last_positive;
}

/// Whitened basis: column j is vectors[:, j] / sqrt(max(values[j], floor))
/// with floor = 1e-10 * values[0], so that W^T C W is the identity on the
/// retained, non-degenerate directions.
inline Matrix whiten_basis(const EigenResult& e, std::size_t rank) {
  if (rank < 1 || rank > e.values.size())
    throw InvalidArgument("whiten_basis: rank " + std::to_string(rank) + " outside [1, " +
                          std::to_string(e.values.size()) + "]");
  if (!(e.values[0] > 0.0)) throw InvalidArgument("whiten_basis: leading eigenvalue must be positive");
  const double floor = 1e-10 * e.values[0];
  Matrix w(e.vectors.rows(), rank);
  for (std::size_t j = 0; j < rank; ++j) {
    const double scale = 1.0 / std::sqrt(std::max(e.values[j], floor));
    for (std::size_t r = 0; r < w.rows(); ++r) w(r, j) = e.vectors(r, j) * scale;
  }
  return w;
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
inline Matrix cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double tiny = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tiny))
      throw NumericalError("cholesky: matrix is not positive definite (pivot " + std::to_string(j) + " = " +
                           std::to_string(d) + ")");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

namespace detail {

// Solves L X = B for lower-triangular L, column by column.
inline Matrix forward_solve(const Matrix& l, const Matrix& b) {
  Matrix x = b;
  const std::size_t n = l.rows();
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  return x;
}

// Solves L^T X = B.
inline Matrix backward_solve_transposed(const Matrix& l, const Matrix& b) {
  Matrix x = b;
  const std::size_t n = l.rows();
  for (std::size_t c = 0; c < b.cols(); ++c)
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, c);
      x(ii, c) = s / l(ii, ii);
    }
  return x;
}

}  // namespace detail

/// Shift added to the diagonal of S_w: gamma times the mean diagonal of
/// the total scatter S_w + S_b (plain gamma when both are zero). Using the
/// total keeps the shift above round-off when S_w is numerically zero.
inline double regularizer_shift(const Matrix& s_b, const Matrix& s_w, double gamma) {
  double scale = (s_w.trace() + s_b.trace()) / static_cast<double>(s_w.rows());
  if (!(scale > 0.0)) scale = 1.0;
  return gamma * scale;
}

/// Regularized generalized symmetric eigenproblem S_b v = lambda S v with
/// S = S_w + regularizer_shift(S_b, S_w, gamma) * I. Solved by Cholesky
/// reduction to a standard symmetric problem; returned vectors have unit
/// Euclidean norm.
inline EigenResult solve_gen_eig(const Matrix& s_b, const Matrix& s_w, double gamma,
                                 const JacobiOptions& opts = {}) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("solve_gen_eig: gamma must be >= 0");
  Matrix b = detail::symmetrized(s_b, "solve_gen_eig(S_b)");
  Matrix w = detail::symmetrized(s_w, "solve_gen_eig(S_w)");
  if (b.rows() != w.rows())
    throw InvalidArgument("solve_gen_eig: S_b is " + std::to_string(b.rows()) + "x" + std::to_string(b.rows()) +
                          " but S_w is " + std::to_string(w.rows()) + "x" + std::to_string(w.rows()));
  const std::size_t n = w.rows();
  if (gamma > 0.0) {
    const double shift = regularizer_shift(b, w, gamma);
    for (std::size_t i = 0; i < n; ++i) w(i, i) += shift;
  }
  const Matrix l = cholesky(w);
  const Matrix x = detail::forward_solve(l, b);
  Matrix reduced = detail::forward_solve(l, x.transpose());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (reduced(i, j) + reduced(j, i));
      reduced(i, j) = s;
      reduced(j, i) = s;
    }
  EigenResult e = sym_eig(reduced, opts);
  Matrix v = detail::backward_solve_transposed(l, e.vectors);
  for (std::size_t c = 0; c < n; ++c) {
    double norm = 0.0;
    for (std::size_t r = 0; r < n; ++r) norm += v(r, c) * v(r, c);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < n; ++r) v(r, c) /= norm;
  }
  detail::apply_sign_convention(v);
  e.vectors = std::move(v);
  return e;
}

}  // namespace mslkit
