#pragma once

// Dependence diagnostics: sample autocorrelation, histogram mutual
// information and Moran's I.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "nitrosep/error.hpp"
#include "nitrosep/matrix.hpp"
#include "nitrosep/random.hpp"

namespace nitrosep {

struct AcfResult {
  std::vector<std::size_t> lags;  // 0..max_lag
  std::vector<double> values;
  std::size_t n = 0;
  double conf_band = 0.0;  // 1.96 / sqrt(n)
};

// Biased estimator: lag-h cross products over the full-series mean, divided
// by the lag-0 sum of squares.
inline AcfResult acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n < max_lag + 2)
    throw TooShort("series of length " + std::to_string(n) + " is too short for lag " +
                   std::to_string(max_lag));
  const double m = mean(series);
  double denom = 0.0;
  for (double x : series) denom += (x - m) * (x - m);
  if (!(denom > 0.0)) throw ConstantSeries();

  AcfResult out;
  out.n = n;
  out.conf_band = 1.96 / std::sqrt(static_cast<double>(n));
  for (std::size_t h = 0; h <= max_lag; ++h) {
    double num = 0.0;
    for (std::size_t t = 0; t + h < n; ++t) num += (series[t] - m) * (series[t + h] - m);
    out.lags.push_back(h);
    out.values.push_back(h == 0 ? 1.0 : std::clamp(num / denom, -1.0, 1.0));
  }
  return out;
}

namespace detail {

inline std::vector<std::size_t> equal_width_bins(std::span<const double> v, std::size_t bins) {
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double width = *hi_it - lo;
  if (!(width > 0.0)) throw DegenerateRange();
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto b = static_cast<std::size_t>(std::floor((v[i] - lo) / width * static_cast<double>(bins)));
    idx[i] = std::min(b, bins - 1);
  }
  return idx;
}

}  // namespace detail

inline constexpr std::size_t kDefaultMiBins = 8;

// Plug-in mutual information (bits) over equal-width bins spanning each
// variable's range. Biased upwards for small samples.
inline double mutual_information_discrete(std::span<const double> x, std::span<const double> y,
                                          std::size_t bins = kDefaultMiBins) {
  if (x.size() != y.size()) throw LengthMismatch(x.size(), y.size());
  if (x.size() < 10) throw TooShort("mutual information needs at least 10 pairs");
  if (bins < 2) throw OutOfRange("bins must be >= 2");
  const auto bx = detail::equal_width_bins(x, bins);
  const auto by = detail::equal_width_bins(y, bins);
  std::vector<std::size_t> joint(bins * bins, 0), mx(bins, 0), my(bins, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++joint[bx[i] * bins + by[i]];
    ++mx[bx[i]];
    ++my[by[i]];
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = 0; j < bins; ++j) {
      const std::size_t c = joint[i * bins + j];
      if (c == 0) continue;
      const double ratio = (static_cast<double>(c) * n) /
                           (static_cast<double>(mx[i]) * static_cast<double>(my[j]));
      mi += static_cast<double>(c) / n * std::log2(ratio);
    }
  }
  return mi;
}

struct SpatialWeights {
  std::size_t n = 0;
  Matrix weights;  // n x n, non-negative, zero diagonal

  void validate() const {
    if (weights.rows() != n || weights.cols() != n) throw ShapeMismatch("weights must be n x n");
    bool any_positive = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights(i, i) != 0.0) throw ShapeMismatch("weights diagonal must be zero");
      for (std::size_t j = 0; j < n; ++j) {
        if (weights(i, j) < 0.0) throw ShapeMismatch("weights must be non-negative");
        any_positive = any_positive || weights(i, j) > 0.0;
      }
    }
    if (!any_positive) throw ShapeMismatch("weights need at least one positive entry");
  }
};

// Sites on a cycle, each linked to its two neighbours with weight 1.
inline SpatialWeights ring_weights(std::size_t n) {
  SpatialWeights w{n, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    w.weights(i, (i + 1) % n) = 1.0;
    w.weights((i + 1) % n, i) = 1.0;
  }
  return w;
}

inline double morans_i(std::span<const double> values, const SpatialWeights& w) {
  w.validate();
  const std::size_t n = values.size();
  if (n != w.n) throw ShapeMismatch("value count does not match weights");
  if (n < 3) throw TooShort("Moran's I needs at least 3 sites");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  if (!(ss > 0.0)) throw ConstantField();
  double cross = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      total += w.weights(i, j);
      cross += w.weights(i, j) * (values[i] - m) * (values[j] - m);
    }
  }
  return static_cast<double>(n) / total * cross / ss;
}

// Fisher-Yates with an explicit stream (std::shuffle's output is not
// specified across implementations).
inline void shuffle_in_place(std::span<double> v, RandomStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(v[i - 1], v[j]);
  }
}

struct PermutationSummary {
  double mean = 0.0;
  double sd = 0.0;
  double standard_error = 0.0;
  double expected = 0.0;  // -1 / (n - 1)
  std::size_t permutations = 0;
};

inline PermutationSummary moran_permutation(std::span<const double> values, const SpatialWeights& w,
                                            std::size_t permutations, std::uint64_t seed) {
  if (permutations < 2) throw OutOfRange("need at least 2 permutations");
  RandomStream rng(seed);
  std::vector<double> v(values.begin(), values.end());
  std::vector<double> stats;
  stats.reserve(permutations);
  for (std::size_t i = 0; i < permutations; ++i) {
    shuffle_in_place(v, rng);
    stats.push_back(morans_i(v, w));
  }
  PermutationSummary s;
  s.permutations = permutations;
  s.mean = mean(stats);
  s.sd = sample_sd(stats);
  s.standard_error = s.sd / std::sqrt(static_cast<double>(permutations));
  s.expected = -1.0 / static_cast<double>(values.size() - 1);
  return s;
}

}  // namespace nitrosep
