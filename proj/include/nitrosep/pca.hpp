#pragma once

// Principal component analysis through the eigendecomposition of the
// covariance (or, when scaled, correlation) matrix.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "nitrosep/csv.hpp"
#include "nitrosep/error.hpp"
#include "nitrosep/matrix.hpp"

namespace nitrosep {

struct PcaModel {
  Matrix loadings;             // variables x components, orthonormal columns
  std::vector<double> stdevs;  // sqrt of eigenvalues, non-increasing
  bool centered = true;
  bool scaled = true;
  std::vector<std::string> variable_labels;
  std::vector<double> means;   // training column means (applied when centered)
  std::vector<double> scales;  // training column sds (applied when scaled)

  std::size_t components() const noexcept { return stdevs.size(); }
};

// A model carrying only a spectrum (identity loadings). Useful for applying
// the retention rules to a published stdev sequence.
inline PcaModel pca_from_spectrum(std::vector<double> stdevs, bool scaled = true) {
  PcaModel m;
  const std::size_t p = stdevs.size();
  m.loadings = Matrix::identity(p);
  m.stdevs = std::move(stdevs);
  m.scaled = scaled;
  m.means.assign(p, 0.0);
  m.scales.assign(p, 1.0);
  for (std::size_t i = 0; i < p; ++i) m.variable_labels.push_back("v" + std::to_string(i + 1));
  return m;
}

inline PcaModel fit_pca(const Matrix& x, bool center, bool scale,
                        std::vector<std::string> labels = {}) {
  if (x.rows() < 3) throw TooFewRows(x.rows(), 3);
  if (x.cols() < 2) throw ShapeMismatch("PCA needs at least 2 variables");
  require_finite(x);
  if (!labels.empty() && labels.size() != x.cols()) throw ShapeMismatch("label count");

  PcaModel m;
  m.centered = center;
  m.scaled = scale;
  m.means = column_means(x);
  m.scales = scale ? column_sds(x) : std::vector<double>(x.cols(), 1.0);
  const Matrix prepared = center_scale(x, center, scale);
  const EigenDecomposition eig = sym_eigen(covariance_matrix(prepared));
  m.loadings = eig.vectors;
  for (double v : eig.values) m.stdevs.push_back(std::sqrt(std::max(v, 0.0)));
  if (labels.empty())
    for (std::size_t i = 0; i < x.cols(); ++i) labels.push_back("v" + std::to_string(i + 1));
  m.variable_labels = std::move(labels);
  return m;
}

// Kaiser criterion: number of components with stdev strictly above 1.
inline std::size_t kaiser_retain(const PcaModel& m) {
  if (!m.scaled) throw RuleInapplicable("Kaiser criterion needs a correlation-matrix (scaled) fit");
  std::size_t n = 0;
  for (double s : m.stdevs) n += s > 1.0;
  return n;
}

inline double explained_variance(const PcaModel& m, std::size_t k) {
  if (k < 1 || k > m.components())
    throw OutOfRange("k=" + std::to_string(k) + " outside 1.." + std::to_string(m.components()));
  double head = 0.0, total = 0.0;
  for (std::size_t i = 0; i < m.components(); ++i) {
    const double v = m.stdevs[i] * m.stdevs[i];
    total += v;
    if (i < k) head += v;
  }
  return total > 0.0 ? head / total : 0.0;
}

// Applies the training centering/scaling to `x`.
inline Matrix pca_prepare(const PcaModel& m, const Matrix& x) {
  if (x.cols() != m.loadings.rows())
    throw ShapeMismatch("data has " + std::to_string(x.cols()) + " columns, model has " +
                        std::to_string(m.loadings.rows()));
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double v = out(r, c);
      if (m.centered) v -= m.means[c];
      if (m.scaled) v /= m.scales[c];
      out(r, c) = v;
    }
  }
  return out;
}

inline Matrix scores(const PcaModel& m, const Matrix& x) { return pca_prepare(m, x) * m.loadings; }

namespace detail {

inline std::string fixed7(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.7f", v);
  std::string s = buf;
  if (s == "-0.0000000") s = "0.0000000";
  return s;
}

}  // namespace detail

// Loadings table: one row per variable, one column per component, and a
// closing "total_stdev" row. Seven decimals.
inline std::string emit_loadings_csv(const PcaModel& m, std::size_t components) {
  std::ostringstream os;
  os << "variable";
  for (std::size_t k = 0; k < components; ++k) os << ",PC" << (k + 1);
  os << '\n';
  for (std::size_t r = 0; r < m.loadings.rows(); ++r) {
    os << csv_quote(m.variable_labels[r]);
    for (std::size_t k = 0; k < components; ++k) os << ',' << detail::fixed7(m.loadings(r, k));
    os << '\n';
  }
  os << "total_stdev";
  for (std::size_t k = 0; k < components; ++k) os << ',' << detail::fixed7(m.stdevs[k]);
  os << '\n';
  return os.str();
}

// Scree data: stdev, variance share and cumulative share per component.
inline std::string emit_spectrum_csv(const PcaModel& m) {
  std::ostringstream os;
  os << "component,stdev,proportion,cumulative\n";
  for (std::size_t k = 0; k < m.components(); ++k) {
    const double cum = explained_variance(m, k + 1);
    const double prev = k ? explained_variance(m, k) : 0.0;
    os << "PC" << (k + 1) << ',' << detail::fixed7(m.stdevs[k]) << ',' << detail::fixed7(cum - prev)
       << ',' << detail::fixed7(cum) << '\n';
  }
  return os.str();
}

}  // namespace nitrosep
