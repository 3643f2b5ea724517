#pragma once

// Dense row-major matrices and the small set of decompositions the
// decomposition models share: centering/scaling, covariance and
// correlation, a cyclic Jacobi symmetric eigensolver and a one-sided Jacobi SVD.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "nitrosep/error.hpp"

namespace nitrosep {

class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeMismatch("data length " + std::to_string(data_.size()) + " != " +
                          std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeMismatch("ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
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
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  void set_col(std::size_t c, std::span<const double> v) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  // Leading `n` columns.
  Matrix left_cols(std::size_t n) const {
    Matrix out(rows_, n);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < n; ++c) out(r, c) = (*this)(r, c);
    return out;
  }

  Matrix top_rows(std::size_t n) const {
    return Matrix(n, cols_, std::vector<double>(data_.begin(), data_.begin() + n * cols_));
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeMismatch("cannot multiply " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " by " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

inline Matrix operator+(Matrix a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("operator+");
  for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] += b.data()[i];
  return a;
}

inline Matrix operator-(Matrix a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("operator-");
  for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] -= b.data()[i];
  return a;
}

inline Matrix operator*(double s, Matrix a) {
  for (double& v : a.data()) v *= s;
  return a;
}

// Largest absolute entry.
inline double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.data()) best = std::max(best, std::abs(v));
  return best;
}

inline double max_abs_off_diagonal(const Matrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j) best = std::max(best, std::abs(m(i, j)));
  return best;
}

inline double trace(const Matrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
  return t;
}

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n-1 denominator).
inline double sample_sd(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline std::vector<double> column_means(const Matrix& x) {
  std::vector<double> m(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) m[c] += x(r, c);
  for (double& v : m) v /= static_cast<double>(x.rows());
  return m;
}

inline std::vector<double> column_sds(const Matrix& x) {
  std::vector<double> sd(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) sd[c] = sample_sd(x.col(c));
  return sd;
}

inline void require_finite(const Matrix& x) {
  if (!x.all_finite()) throw NonFinite();
}

inline Matrix center_scale(const Matrix& x, bool center, bool scale) {
  if (x.rows() < 2) throw TooFewRows(x.rows(), 2);
  const auto means = column_means(x);
  std::vector<double> sds;
  if (scale) {
    sds = column_sds(x);
    for (std::size_t c = 0; c < sds.size(); ++c)
      if (!(sds[c] > 0.0)) throw ZeroVarianceColumn(c);
  }
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double v = out(r, c);
      if (center) v -= means[c];
      if (scale) v /= sds[c];
      out(r, c) = v;
    }
  }
  // Centering before scaling only leaves a rounding-level mean; remove it.
  if (center && scale) {
    const auto residual = column_means(out);
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) -= residual[c];
  }
  return out;
}

inline Matrix covariance_matrix(const Matrix& x) {
  if (x.rows() < 2) throw TooFewRows(x.rows(), 2);
  const auto means = column_means(x);
  const std::size_t p = x.cols();
  Matrix xc = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < p; ++c) xc(r, c) -= means[c];
  Matrix s(p, p);
  const double denom = static_cast<double>(x.rows() - 1);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) acc += xc(r, i) * xc(r, j);
      s(i, j) = s(j, i) = acc / denom;
    }
  }
  return s;
}

inline Matrix correlation_matrix(const Matrix& x) {
  const Matrix s = covariance_matrix(x);
  const std::size_t p = s.cols();
  std::vector<double> sd(p);
  for (std::size_t i = 0; i < p; ++i) {
    if (!(s(i, i) > 0.0)) throw ZeroVarianceColumn(i);
    sd[i] = std::sqrt(s(i, i));
  }
  Matrix r(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    r(i, i) = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      const double v = std::clamp(s(i, j) / (sd[i] * sd[j]), -1.0, 1.0);
      r(i, j) = r(j, i) = v;
    }
  }
  return r;
}

struct EigenDecomposition {
  std::vector<double> values;  // non-increasing
  Matrix vectors;              // column i pairs with values[i]
};

// Flip each column so its largest-magnitude entry is positive (first index
// wins ties).
inline void canonicalize_signs(Matrix& v) {
  for (std::size_t c = 0; c < v.cols(); ++c) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < v.rows(); ++r) {
      if (std::abs(v(r, c)) > best) {
        best = std::abs(v(r, c));
        arg = r;
      }
    }
    if (v(arg, c) < 0.0)
      for (std::size_t r = 0; r < v.rows(); ++r) v(r, c) = -v(r, c);
  }
}

inline constexpr double kJacobiThreshold = 1e-12;
inline constexpr std::size_t kJacobiMaxSweeps = 100;

// Cyclic Jacobi. Converged when the off-diagonal Frobenius norm drops
// below kJacobiThreshold times the Frobenius norm of the input.
inline EigenDecomposition sym_eigen(const Matrix& s) {
  const std::size_t n = s.rows();
  if (n != s.cols()) throw NotSymmetric();
  require_finite(s);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-10) throw NotSymmetric();

  Matrix a = s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));
  Matrix v = Matrix::identity(n);

  auto off_norm = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) acc += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(acc);
  };
  double total = 0.0;
  for (double x : a.data()) total += x * x;
  const double tol = kJacobiThreshold * std::sqrt(total);

  std::size_t sweep = 0;
  while (off_norm() > tol) {
    if (sweep == kJacobiMaxSweeps) throw DidNotConverge(sweep);
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  canonicalize_signs(out.vectors);
  return out;
}

struct SvdDecomposition {
  Matrix u;                   // rows x r, orthonormal columns
  std::vector<double> sigma;  // r values, non-increasing, >= 0
  Matrix v;                   // cols x r, orthonormal columns
};

namespace detail {

// Modified Gram-Schmidt on the columns of `m`, in order. Columns that
// collapse numerically are replaced by the first unit vector that is
// independent of the columns already accepted.
inline void orthonormalize_columns(Matrix& m) {
  const std::size_t n = m.rows();
  for (std::size_t c = 0; c < m.cols(); ++c) {
    auto project_out = [&](std::vector<double>& w) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t prev = 0; prev < c; ++prev) {
          double d = 0.0;
          for (std::size_t r = 0; r < n; ++r) d += w[r] * m(r, prev);
          for (std::size_t r = 0; r < n; ++r) w[r] -= d * m(r, prev);
        }
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      return std::sqrt(norm);
    };
    std::vector<double> w = m.col(c);
    double before = 0.0;
    for (double x : w) before += x * x;
    double norm = project_out(w);
    if (!(norm > 1e-8 * std::max(1.0, std::sqrt(before)))) {
      for (std::size_t e = 0; e < n; ++e) {
        w.assign(n, 0.0);
        w[e] = 1.0;
        norm = project_out(w);
        if (norm > 1e-6) break;
      }
    }
    for (std::size_t r = 0; r < n; ++r) m(r, c) = w[r] / norm;
  }
}

}  // namespace detail

inline constexpr std::size_t kSvdMaxSweeps = 100;

// Thin SVD by one-sided (Hestenes) Jacobi rotations on the columns of the
// taller orientation. Small singular values keep full relative accuracy,
// which the rank tests in whitening rely on.
inline SvdDecomposition svd(const Matrix& x) {
  require_finite(x);
  const bool tall = x.cols() <= x.rows();
  Matrix u = tall ? x : x.transpose();
  const std::size_t m = u.rows();
  const std::size_t n = u.cols();
  Matrix v = Matrix::identity(n);
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(m);

  std::size_t sweep = 0;
  for (bool rotated = true; rotated;) {
    if (sweep == kSvdMaxSweeps) throw DidNotConverge(sweep);
    ++sweep;
    rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double a = 0.0, b = 0.0, c = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
          a += u(r, i) * u(r, i);
          b += u(r, j) * u(r, j);
          c += u(r, i) * u(r, j);
        }
        if (a == 0.0 || b == 0.0 || std::abs(c) <= tol * std::sqrt(a * b)) continue;
        rotated = true;
        const double zeta = (b - a) / (2.0 * c);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (std::size_t r = 0; r < m; ++r) {
          const double ui = u(r, i);
          const double uj = u(r, j);
          u(r, i) = cs * ui - sn * uj;
          u(r, j) = sn * ui + cs * uj;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vi = v(r, i);
          const double vj = v(r, j);
          v(r, i) = cs * vi - sn * vj;
          v(r, j) = sn * vi + cs * vj;
        }
      }
    }
  }

  std::vector<double> norms(n);
  for (std::size_t c = 0; c < n; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < m; ++r) acc += u(r, c) * u(r, c);
    norms[c] = std::sqrt(acc);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

  Matrix us(m, n), vs(n, n);
  std::vector<double> sigma(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = order[k];
    sigma[k] = norms[c];
    for (std::size_t r = 0; r < m; ++r) us(r, k) = norms[c] > 0.0 ? u(r, c) / norms[c] : 0.0;
    for (std::size_t r = 0; r < n; ++r) vs(r, k) = v(r, c);
  }
  // Null directions have no defined left vector; complete the basis.
  detail::orthonormalize_columns(us);

  SvdDecomposition out;
  out.sigma = std::move(sigma);
  if (tall) {
    out.u = std::move(us);
    out.v = std::move(vs);
  } else {
    out.u = std::move(vs);
    out.v = std::move(us);
  }
  return out;
}

// Moore-Penrose pseudo-inverse; singular values below rel_tol * sigma_max
// are treated as zero.
inline Matrix pseudo_inverse(const Matrix& x, double rel_tol = 1e-12) {
  const SvdDecomposition d = svd(x);
  Matrix out(x.cols(), x.rows());
  const double cut = d.sigma.empty() ? 0.0 : d.sigma[0] * rel_tol;
  for (std::size_t k = 0; k < d.sigma.size(); ++k) {
    if (!(d.sigma[k] > cut)) continue;
    const double inv = 1.0 / d.sigma[k];
    for (std::size_t i = 0; i < x.cols(); ++i)
      for (std::size_t j = 0; j < x.rows(); ++j) out(i, j) += d.v(i, k) * inv * d.u(j, k);
  }
  return out;
}

// Square inverse by Gauss-Jordan with partial pivoting.
inline Matrix inverse(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n != m.cols()) throw ShapeMismatch("inverse of non-square matrix");
  Matrix a = m;
  Matrix inv = Matrix::identity(n);
  const double scale = std::max(max_abs(m), 1e-300);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (std::abs(a(piv, c)) <= 1e-13 * scale) throw Singular("matrix is singular");
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) {
        std::swap(a(c, k), a(piv, k));
        std::swap(inv(c, k), inv(piv, k));
      }
    }
    const double d = a(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      a(c, k) /= d;
      inv(c, k) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        a(r, k) -= f * a(c, k);
        inv(r, k) -= f * inv(c, k);
      }
    }
  }
  return inv;
}

// Lower Cholesky factor of a symmetric positive definite matrix.
inline Matrix cholesky(const Matrix& s) {
  const std::size_t n = s.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw Singular("matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = s(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }
  return l;
}

inline double spd_log_det(const Matrix& s) {
  const Matrix l = cholesky(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

// Condition number sigma_max / sigma_min (infinite when singular).
inline double condition_number(const Matrix& m) {
  const SvdDecomposition d = svd(m);
  const double lo = d.sigma.back();
  return lo > 0.0 ? d.sigma.front() / lo : std::numeric_limits<double>::infinity();
}

}  // namespace nitrosep
