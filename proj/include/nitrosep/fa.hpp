#pragma once

// Maximum-likelihood exploratory factor analysis on a correlation matrix.
//
// For fixed uniquenesses Psi the loadings are profiled out through the
// eigendecomposition of Psi^-1/2 R Psi^-1/2; the remaining discrepancy
//   F(Psi) = sum_{j>k} (e_j - ln e_j) - (p - k)
// is minimized over log Psi with a box-constrained BFGS, Psi in [0.005, 1].

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "nitrosep/error.hpp"
#include "nitrosep/matrix.hpp"
#include "nitrosep/numfmt.hpp"

namespace nitrosep {

inline constexpr double kUniquenessFloor = 0.005;
inline constexpr double kUniquenessCeiling = 1.0;

struct FaModel {
  Matrix loadings;                   // p x k, unrotated
  std::vector<double> uniquenesses;  // psi_i
  std::size_t k = 0;
  double objective = 0.0;  // minimized discrepancy F
  double statistic = 0.0;  // Bartlett-corrected likelihood-ratio statistic
  long dof = 0;
  double p_value = std::numeric_limits<double>::quiet_NaN();
  Matrix residual;     // R - (L L^T + Psi)
  Matrix correlation;  // R the model was fitted to
  std::size_t n_obs = 0;
  bool converged = false;
  bool heywood = false;  // some psi sits on the lower bound
  std::size_t iterations = 0;

  std::size_t variables() const noexcept { return uniquenesses.size(); }

  Matrix implied() const {
    Matrix s = loadings * loadings.transpose();
    for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += uniquenesses[i];
    return s;
  }
};

// ((p - k)^2 - p - k) / 2; always an integer.
constexpr long fa_dof(std::size_t p, std::size_t k) noexcept {
  const long pl = static_cast<long>(p);
  const long kl = static_cast<long>(k);
  return ((pl - kl) * (pl - kl) - pl - kl) / 2;
}

namespace detail {

struct Profile {
  std::vector<double> eigenvalues;  // of Psi^-1/2 R Psi^-1/2, descending
  Matrix eigenvectors;
};

inline Profile fa_profile(const Matrix& r, std::span<const double> psi) {
  const std::size_t p = r.rows();
  Matrix s(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) s(i, j) = r(i, j) / std::sqrt(psi[i] * psi[j]);
  EigenDecomposition eig = sym_eigen(s);
  return {std::move(eig.values), std::move(eig.vectors)};
}

inline Matrix fa_loadings(const Profile& prof, std::span<const double> psi, std::size_t k) {
  const std::size_t p = psi.size();
  Matrix l(p, k);
  for (std::size_t j = 0; j < k; ++j) {
    const double scale = std::sqrt(std::max(prof.eigenvalues[j] - 1.0, 0.0));
    for (std::size_t i = 0; i < p; ++i) l(i, j) = std::sqrt(psi[i]) * prof.eigenvectors(i, j) * scale;
  }
  return l;
}

inline std::vector<double> exp_all(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]);
  return out;
}

}  // namespace detail

// Discrepancy F at uniquenesses exp(log_psi).
inline double fa_objective(const Matrix& r, std::span<const double> log_psi, std::size_t k) {
  const auto psi = detail::exp_all(log_psi);
  const auto prof = detail::fa_profile(r, psi);
  double f = 0.0;
  for (std::size_t j = k; j < prof.eigenvalues.size(); ++j) {
    const double e = prof.eigenvalues[j];
    if (!(e > 0.0)) return std::numeric_limits<double>::infinity();
    f += e - std::log(e);
  }
  return f - static_cast<double>(r.rows() - k);
}

// dF/d(log psi_i) = (L L^T + Psi - R)_ii / psi_i.
inline std::vector<double> fa_gradient(const Matrix& r, std::span<const double> log_psi, std::size_t k) {
  const auto psi = detail::exp_all(log_psi);
  const auto prof = detail::fa_profile(r, psi);
  const Matrix l = detail::fa_loadings(prof, psi, k);
  std::vector<double> g(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    double ll = 0.0;
    for (std::size_t j = 0; j < k; ++j) ll += l(i, j) * l(i, j);
    g[i] = (ll + psi[i] - r(i, i)) / psi[i];
  }
  return g;
}

namespace detail {

struct BoxResult {
  std::vector<double> x;
  bool converged = false;
  std::size_t iterations = 0;
};

// Projected BFGS with an active set for simple bounds. Stops when the free
// gradient falls below gtol, or when an accepted step lowers f by less than
// ftol relative to max(1, |f|).
inline BoxResult minimize_box_bfgs(const std::function<double(std::span<const double>)>& f,
                                   const std::function<std::vector<double>(std::span<const double>)>& grad,
                                   std::vector<double> x, double lo, double hi,
                                   std::size_t max_iter = 1000, double gtol = 1e-8,
                                   double ftol = 1e-14) {
  const std::size_t n = x.size();
  for (double& v : x) v = std::clamp(v, lo, hi);
  Matrix h = Matrix::identity(n);
  double fx = f(x);
  std::vector<double> g = grad(x);
  BoxResult res;

  auto active = [&](std::size_t i, const std::vector<double>& gv) {
    return (x[i] <= lo && gv[i] > 0.0) || (x[i] >= hi && gv[i] < 0.0);
  };

  for (std::size_t it = 0; it < max_iter; ++it) {
    res.iterations = it;
    double pg = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!active(i, g)) pg = std::max(pg, std::abs(g[i]));
    if (pg < gtol) {
      res.converged = true;
      break;
    }

    std::vector<double> d(n, 0.0);
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (active(i, g)) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (!active(j, g)) d[i] -= h(i, j) * g[j];
      slope += d[i] * g[i];
    }
    if (!(slope < 0.0)) {
      h = Matrix::identity(n);
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = active(i, g) ? 0.0 : -g[i];
        slope += d[i] * g[i];
      }
    }

    double step = 1.0;
    std::vector<double> xn(n);
    double fn = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        xn[i] = std::clamp(x[i] + step * d[i], lo, hi);
        decrease += g[i] * (xn[i] - x[i]);
      }
      fn = f(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent possible along the projected direction at working
      // precision; accept as converged when the gradient is already small.
      res.converged = pg < 1e-6;
      break;
    }

    const std::vector<double> gn = grad(xn);
    std::vector<double> s(n), y(n);
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
      sy += s[i] * y[i];
    }
    if (sy > 1e-14) {
      std::vector<double> hy(n, 0.0);
      double yhy = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) hy[i] += h(i, j) * y[j];
      for (std::size_t i = 0; i < n; ++i) yhy += y[i] * hy[i];
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          h(i, j) += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
    }
    const bool stalled = fx - fn <= ftol * std::max(1.0, std::abs(fx));
    x = std::move(xn);
    fx = fn;
    g = gn;
    res.iterations = it + 1;
    if (stalled) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

inline double chi_square_upper(double stat, long dof) {
  if (dof <= 0) return std::numeric_limits<double>::quiet_NaN();
  return boost::math::gamma_q(static_cast<double>(dof) / 2.0, std::max(stat, 0.0) / 2.0);
}

}  // namespace detail

// Bartlett-corrected likelihood-ratio statistic for `m` at sample size n.
inline double fa_lr_statistic(const FaModel& m, std::size_t n) {
  const Matrix sigma = m.implied();
  const double p = static_cast<double>(m.variables());
  const double k = static_cast<double>(m.k);
  const Matrix sigma_inv = inverse(sigma);
  const double discrepancy =
      spd_log_det(sigma) - spd_log_det(m.correlation) + trace(m.correlation * sigma_inv) - p;
  const double bartlett = static_cast<double>(n) - 1.0 - (2.0 * p + 5.0) / 6.0 - 2.0 * k / 3.0;
  return bartlett * discrepancy;
}

struct LrTest {
  double statistic;
  long dof;
  double p_value;  // NaN when dof == 0
};

inline LrTest lr_test(const FaModel& m, std::size_t n) {
  if (!m.converged) throw NotConverged("factor model with k=" + std::to_string(m.k) + " did not converge");
  const double stat = fa_lr_statistic(m, n);
  return {stat, m.dof, detail::chi_square_upper(stat, m.dof)};
}

inline Matrix residual_matrix(const FaModel& m, const Matrix& r) {
  if (r.rows() != m.variables() || r.cols() != m.variables())
    throw ShapeMismatch("correlation matrix does not match the model's variable count");
  return r - m.implied();
}

// Fits to a supplied correlation matrix with nominal sample size n_obs
// (population-input mode). fit_fa_ml on data delegates here.
inline FaModel fit_fa_correlation(const Matrix& r, std::size_t k, std::size_t n_obs) {
  const std::size_t p = r.rows();
  if (r.cols() != p) throw ShapeMismatch("correlation matrix must be square");
  if (k < 1) throw OutOfRange("need at least one factor");
  const long dof = fa_dof(p, k);
  if (dof < 0 || k >= p) throw DofNegative(k);
  for (std::size_t i = 0; i < p; ++i)
    if (std::abs(r(i, i) - 1.0) > 1e-8) throw ShapeMismatch("input is not a correlation matrix");

  Matrix r_inv;
  try {
    (void)cholesky(r);
    r_inv = inverse(r);
  } catch (const Singular&) {
    throw SingularCorrelation();
  }
  if (sym_eigen(r).values.back() < 1e-10) throw SingularCorrelation();

  std::vector<double> start(p);
  for (std::size_t i = 0; i < p; ++i) {
    const double psi0 = (1.0 - 0.5 * static_cast<double>(k) / static_cast<double>(p)) / r_inv(i, i);
    start[i] = std::log(std::clamp(psi0, kUniquenessFloor, kUniquenessCeiling));
  }
  const double lo = std::log(kUniquenessFloor);
  const double hi = std::log(kUniquenessCeiling);
  auto f = [&](std::span<const double> lp) { return fa_objective(r, lp, k); };
  auto g = [&](std::span<const double> lp) { return fa_gradient(r, lp, k); };
  const auto opt = detail::minimize_box_bfgs(f, g, start, lo, hi);

  FaModel m;
  m.k = k;
  m.dof = dof;
  m.n_obs = n_obs;
  m.correlation = r;
  m.converged = opt.converged;
  m.iterations = opt.iterations;
  m.uniquenesses = detail::exp_all(opt.x);
  for (std::size_t i = 0; i < p; ++i) {
    if (opt.x[i] <= lo) {
      m.uniquenesses[i] = kUniquenessFloor;
      m.heywood = true;
    }
    if (opt.x[i] >= hi) m.uniquenesses[i] = kUniquenessCeiling;
  }
  m.loadings = detail::fa_loadings(detail::fa_profile(r, m.uniquenesses), m.uniquenesses, k);
  m.objective = fa_objective(r, opt.x, k);
  m.residual = residual_matrix(m, r);
  m.statistic = fa_lr_statistic(m, n_obs);
  m.p_value = detail::chi_square_upper(m.statistic, dof);
  return m;
}

inline FaModel fit_fa_ml(const Matrix& x, std::size_t k) {
  if (x.rows() <= x.cols()) throw TooFewRows(x.rows(), x.cols() + 1);
  require_finite(x);
  return fit_fa_correlation(correlation_matrix(x), k, x.rows());
}

struct FactorSelection {
  std::size_t k = 0;
  bool inadequate = false;  // no k up to k_max passed
  std::vector<FaModel> fits;  // fits[i] has k = i + 1
};

// Smallest k in 1..k_max whose likelihood-ratio p-value exceeds alpha.
// Every k is fitted so the full p-value sequence is available.
inline FactorSelection select_factors(const Matrix& x, std::size_t k_max, double alpha) {
  if (k_max < 1) throw OutOfRange("k_max must be >= 1");
  if (fa_dof(x.cols(), k_max) < 0) throw DofNegative(k_max);
  FactorSelection sel;
  for (std::size_t k = 1; k <= k_max; ++k) sel.fits.push_back(fit_fa_ml(x, k));
  for (const auto& m : sel.fits) {
    if (m.p_value > alpha) {
      sel.k = m.k;
      return sel;
    }
  }
  sel.k = k_max;
  sel.inadequate = true;
  return sel;
}

// Selection over an already computed p-value sequence (k = index + 1).
inline FactorSelection select_from_p_values(const std::vector<double>& p_values, double alpha) {
  FactorSelection sel;
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    if (p_values[i] > alpha) {
      sel.k = i + 1;
      return sel;
    }
  }
  sel.k = p_values.size();
  sel.inadequate = true;
  return sel;
}

inline bool residual_adequate(const Matrix& residual, double threshold = 0.05) {
  return max_abs_off_diagonal(residual) <= threshold;
}

inline std::string emit_fa_loadings_csv(const FaModel& m, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "variable";
  for (std::size_t j = 0; j < m.k; ++j) os << ",F" << (j + 1);
  os << ",uniqueness\n";
  for (std::size_t i = 0; i < m.variables(); ++i) {
    os << labels[i];
    for (std::size_t j = 0; j < m.k; ++j) os << ',' << format_number(m.loadings(i, j));
    os << ',' << format_number(m.uniquenesses[i]) << '\n';
  }
  return os.str();
}

inline std::string emit_square_csv(const Matrix& s, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "variable";
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  for (std::size_t i = 0; i < s.rows(); ++i) {
    os << labels[i];
    for (std::size_t j = 0; j < s.cols(); ++j) os << ',' << format_number(s(i, j));
    os << '\n';
  }
  return os.str();
}

}  // namespace nitrosep
