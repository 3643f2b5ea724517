#pragma once

// FastICA with SVD whitening and symmetric (parallel) fixed-point updates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nitrosep/error.hpp"
#include "nitrosep/matrix.hpp"
#include "nitrosep/random.hpp"

namespace nitrosep {

enum class Contrast { logcosh, cube };

struct IcaConfig {
  std::size_t n_components = 2;
  std::size_t max_iter = 200;
  double tol = 1e-4;
  Contrast contrast = Contrast::logcosh;
  double logcosh_alpha = 1.0;
  std::uint64_t seed = 0;
  bool prescale = false;  // variance-scale columns before whitening

  void validate() const {
    if (n_components < 1) throw InvalidConfig("n_components must be >= 1");
    if (!(tol > 0.0)) throw InvalidConfig("tol must be > 0");
    if (max_iter < 1) throw InvalidConfig("max_iter must be >= 1");
    if (!(logcosh_alpha >= 1.0 && logcosh_alpha <= 2.0))
      throw InvalidConfig("logcosh_alpha must lie in [1, 2]");
  }
};

struct IcaModel {
  Matrix whitening;  // K: components x variables
  Matrix unmixing;   // W: components x components, orthonormal rows
  Matrix mixing;     // A: variables x components, pinv(W K)
  Matrix sources;    // S = Xc K^T W^T: rows x components
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> delta_history;
  std::vector<double> means;
  std::vector<double> scales;

  // W K, the full unmixing map from centered data to sources.
  Matrix separating() const { return unmixing * whitening; }
};

struct Whitened {
  Matrix z;  // rows x components, identity sample covariance
  Matrix k;  // components x variables
};

inline constexpr double kRankTolerance = 1e-10;

// Centers `x` and projects onto the leading right singular vectors, scaled
// so that the projected data has identity (n-1) covariance.
inline Whitened whiten(const Matrix& x, std::size_t n_components) {
  if (x.rows() < 2) throw TooFewRows(x.rows(), 2);
  const Matrix xc = center_scale(x, true, false);
  const SvdDecomposition d = svd(xc);
  std::size_t rank = 0;
  for (double s : d.sigma) rank += d.sigma[0] > 0.0 && s >= kRankTolerance * d.sigma[0];
  if (n_components > rank || n_components > x.cols()) throw RankDeficient(rank);

  const double root = std::sqrt(static_cast<double>(x.rows() - 1));
  Whitened out{Matrix(), Matrix(n_components, x.cols())};
  for (std::size_t i = 0; i < n_components; ++i)
    for (std::size_t c = 0; c < x.cols(); ++c) out.k(i, c) = root * d.v(c, i) / d.sigma[i];
  out.z = xc * out.k.transpose();
  return out;
}

// (W W^T)^(-1/2) W, eigenvalues floored at 1e-12.
inline Matrix symmetric_decorrelation(const Matrix& w) {
  const EigenDecomposition eig = sym_eigen(w * w.transpose());
  const std::size_t n = w.rows();
  Matrix inv_sqrt(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        acc += eig.vectors(i, k) * eig.vectors(j, k) / std::sqrt(std::max(eig.values[k], 1e-12));
      inv_sqrt(i, j) = acc;
    }
  }
  return inv_sqrt * w;
}

inline IcaModel fast_ica(const Matrix& x, const IcaConfig& cfg) {
  cfg.validate();
  require_finite(x);
  const std::size_t k = cfg.n_components;
  if (x.rows() < 10 * k) throw TooFewRows(x.rows(), 10 * k);

  IcaModel m;
  m.means = column_means(x);
  m.scales = cfg.prescale ? column_sds(x) : std::vector<double>(x.cols(), 1.0);
  const Matrix prepared = cfg.prescale ? center_scale(x, true, true) : x;
  Whitened wh = whiten(prepared, k);
  const Matrix& z = wh.z;
  const std::size_t n = z.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  RandomStream rng(cfg.seed);
  Matrix w(k, k);
  for (double& v : w.data()) v = rng.normal();
  w = symmetric_decorrelation(w);

  const double alpha = cfg.logcosh_alpha;
  Matrix proj(k, n);
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    // proj = W z^T
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += w(i, j) * z(t, j);
        proj(i, t) = acc;
      }
    }
    Matrix next(k, k);
    for (std::size_t i = 0; i < k; ++i) {
      double mean_dg = 0.0;
      std::vector<double> acc(k, 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        const double u = proj(i, t);
        double g, dg;
        if (cfg.contrast == Contrast::logcosh) {
          g = std::tanh(alpha * u);
          dg = alpha * (1.0 - g * g);
        } else {
          g = u * u * u;
          dg = 3.0 * u * u;
        }
        mean_dg += dg;
        for (std::size_t j = 0; j < k; ++j) acc[j] += g * z(t, j);
      }
      mean_dg *= inv_n;
      for (std::size_t j = 0; j < k; ++j) next(i, j) = acc[j] * inv_n - mean_dg * w(i, j);
    }
    next = symmetric_decorrelation(next);

    double delta = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += next(i, j) * w(i, j);
      delta = std::max(delta, std::abs(1.0 - std::abs(dot)));
    }
    w = std::move(next);
    m.delta_history.push_back(delta);
    m.iterations = it;
    if (delta < cfg.tol) {
      m.converged = true;
      break;
    }
  }

  m.whitening = std::move(wh.k);
  m.unmixing = std::move(w);
  m.sources = z * m.unmixing.transpose();
  m.mixing = pseudo_inverse(m.separating());
  return m;
}

// Amari distance between an estimated unmixing and the true mixing,
// normalized to [0, 1]. Zero iff W A is a scaled permutation. Rows of W A
// are first divided by their largest magnitude, which makes the index
// invariant to rescaling the estimated components. Throws Singular when
// W A has an all-zero row or column (the ratio is undefined).
inline double amari_index(const Matrix& w_est, const Matrix& a_true) {
  Matrix p = w_est * a_true;
  const std::size_t n = p.rows();
  if (n != p.cols()) throw ShapeMismatch("W A must be square");
  if (n < 2) return 0.0;
  double rows = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0, mx = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sum += std::abs(p(i, j));
      mx = std::max(mx, std::abs(p(i, j)));
    }
    if (!(mx > 0.0)) throw Singular("W A has a zero row");
    rows += sum / mx - 1.0;
    for (std::size_t j = 0; j < n; ++j) p(i, j) /= mx;
  }
  double cols = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += std::abs(p(i, j));
      mx = std::max(mx, std::abs(p(i, j)));
    }
    if (!(mx > 0.0)) throw Singular("W A has a zero column");
    cols += sum / mx - 1.0;
  }
  const double nn = static_cast<double>(n);
  return (rows + cols) / (2.0 * nn) / (nn - 1.0);
}

}  // namespace nitrosep
