#pragma once

// Synthetic mixtures with known sources and mixing, and recovery scoring
// for fitted ICA/PCA models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "nitrosep/error.hpp"
#include "nitrosep/ica.hpp"
#include "nitrosep/matrix.hpp"
#include "nitrosep/numfmt.hpp"
#include "nitrosep/pca.hpp"
#include "nitrosep/random.hpp"

namespace nitrosep {

enum class SourceDist { uniform, laplace, gaussian };

inline const char* to_string(SourceDist d) {
  switch (d) {
    case SourceDist::uniform: return "uniform";
    case SourceDist::laplace: return "laplace";
    case SourceDist::gaussian: return "gaussian";
  }
  return "?";
}

inline SourceDist parse_source_dist(std::string_view s) {
  if (s == "uniform") return SourceDist::uniform;
  if (s == "laplace") return SourceDist::laplace;
  if (s == "gaussian") return SourceDist::gaussian;
  throw InvalidConfig("unknown source distribution '" + std::string(s) + "'");
}

struct SyntheticScenario {
  Matrix sources;  // rows x k, each column zero mean, unit sample variance
  Matrix mixing;   // p x k
  double noise_sd = 0.0;
  std::vector<SourceDist> distributions;
  std::uint64_t seed = 0;
  Matrix observed;  // sources * mixing^T + noise
};

inline constexpr std::size_t kMaxMixingDraws = 50;

// Stream layout under `seed`: child 0 draws the mixing matrix, child 1+i
// source column i, child 1'000'000+j the noise on observed column j.
inline SyntheticScenario generate_scenario(std::size_t k, std::size_t p, std::size_t rows,
                                           const std::vector<SourceDist>& distributions,
                                           double mixing_condition_max, double noise_sd,
                                           std::uint64_t seed) {
  if (k < 1 || p < k) throw InvalidConfig("need 1 <= k <= p");
  if (rows < 100) throw TooFewRows(rows, 100);
  if (distributions.size() != k) throw LengthMismatch(distributions.size(), k);
  if (!(noise_sd >= 0.0)) throw InvalidConfig("noise_sd must be >= 0");

  SyntheticScenario sc;
  sc.noise_sd = noise_sd;
  sc.distributions = distributions;
  sc.seed = seed;

  RandomStream mix_rng = RandomStream::child(seed, 0);
  bool ok = false;
  for (std::size_t attempt = 0; attempt < kMaxMixingDraws && !ok; ++attempt) {
    sc.mixing = Matrix(p, k);
    for (double& v : sc.mixing.data()) v = mix_rng.normal();
    ok = condition_number(sc.mixing) <= mixing_condition_max;
  }
  if (!ok) throw ConditioningFailed(kMaxMixingDraws);

  sc.sources = Matrix(rows, k);
  for (std::size_t c = 0; c < k; ++c) {
    RandomStream rng = RandomStream::child(seed, 1 + c);
    std::vector<double> col(rows);
    for (double& v : col) {
      switch (distributions[c]) {
        case SourceDist::uniform: v = rng.uniform_unit_variance(); break;
        case SourceDist::laplace: v = rng.laplace(); break;
        case SourceDist::gaussian: v = rng.normal(); break;
      }
    }
    const double m = mean(col);
    for (double& v : col) v -= m;
    const double sd = sample_sd(col);
    for (double& v : col) v /= sd;
    sc.sources.set_col(c, col);
  }

  sc.observed = sc.sources * sc.mixing.transpose();
  if (noise_sd > 0.0) {
    for (std::size_t j = 0; j < p; ++j) {
      RandomStream rng = RandomStream::child(seed, 1'000'000 + j);
      for (std::size_t r = 0; r < rows; ++r) sc.observed(r, j) += noise_sd * rng.normal();
    }
  }
  return sc;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

struct RecoveryReport {
  double amari = 0.0;
  std::vector<double> best_match;  // |corr| of each true source with its greedy match
  double min_best_match = 0.0;
};

// Greedy one-to-one pairing by largest |correlation| between the columns of
// `truth` and `recovered`.
inline std::vector<double> greedy_match(const Matrix& truth, const Matrix& recovered) {
  const std::size_t k = truth.cols();
  const std::size_t m = recovered.cols();
  Matrix c(k, m);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < m; ++j) c(i, j) = std::abs(pearson(truth.col(i), recovered.col(j)));
  std::vector<double> best(k, 0.0);
  std::vector<bool> used_t(k, false), used_r(m, false);
  for (std::size_t round = 0; round < std::min(k, m); ++round) {
    double top = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (used_t[i]) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (used_r[j]) continue;
        if (c(i, j) > top) {
          top = c(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    used_t[bi] = used_r[bj] = true;
    best[bi] = top;
  }
  return best;
}

namespace detail {

inline RecoveryReport score_recovery(const SyntheticScenario& sc, const Matrix& unmixing,
                                     const Matrix& recovered) {
  RecoveryReport rep;
  rep.amari = amari_index(unmixing, sc.mixing);
  rep.best_match = greedy_match(sc.sources, recovered);
  rep.min_best_match = *std::min_element(rep.best_match.begin(), rep.best_match.end());
  return rep;
}

}  // namespace detail

// Unmixing in raw-data coordinates: W K diag(1/scale).
inline Matrix effective_unmixing(const IcaModel& m) {
  Matrix u = m.separating();
  for (std::size_t r = 0; r < u.rows(); ++r)
    for (std::size_t c = 0; c < u.cols(); ++c) u(r, c) /= m.scales[c];
  return u;
}

// The leading k loading columns, transposed, in raw-data coordinates.
inline Matrix effective_unmixing(const PcaModel& m, std::size_t k) {
  Matrix u(k, m.loadings.rows());
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < u.cols(); ++c)
      u(r, c) = m.loadings(c, r) / (m.scaled ? m.scales[c] : 1.0);
  return u;
}

inline RecoveryReport evaluate_recovery(const SyntheticScenario& sc, const IcaModel& m) {
  if (m.whitening.cols() != sc.mixing.rows() || m.unmixing.rows() != sc.mixing.cols())
    throw ShapeMismatch("ICA model does not match the scenario's shape");
  return detail::score_recovery(sc, effective_unmixing(m), m.sources);
}

inline RecoveryReport evaluate_recovery(const SyntheticScenario& sc, const PcaModel& m) {
  const std::size_t k = sc.mixing.cols();
  if (m.loadings.rows() != sc.mixing.rows())
    throw ShapeMismatch("PCA model does not match the scenario's shape");
  const Matrix s = scores(m, sc.observed);
  return detail::score_recovery(sc, effective_unmixing(m, k), s.left_cols(k));
}

struct SweepSpec {
  std::vector<std::vector<SourceDist>> distribution_sets;
  std::vector<double> noise_levels{0.0, 0.1, 0.5};
  std::size_t observed_vars = 0;  // 0: same as source count
  std::size_t rows = 5000;
  double condition_max = 10.0;
  std::size_t seeds = 10;
  std::uint64_t base_seed = 0;
  IcaConfig ica;  // n_components is overridden per scenario
};

struct SweepRow {
  std::string distributions;
  double noise_sd;
  std::string method;
  double amari_mean, amari_min, amari_max;
  std::size_t converged;  // ICA runs that converged; PCA always counts
  std::size_t runs;
};

// Replicate r uses seed base_seed + r for both the scenario and ICA start.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  std::vector<SweepRow> out;
  for (const auto& dists : spec.distribution_sets) {
    std::string label;
    for (std::size_t i = 0; i < dists.size(); ++i) label += (i ? "+" : "") + std::string(to_string(dists[i]));
    const std::size_t k = dists.size();
    const std::size_t p = spec.observed_vars ? spec.observed_vars : k;
    for (double noise : spec.noise_levels) {
      std::vector<double> ica_scores, pca_scores;
      std::size_t conv = 0;
      for (std::size_t r = 0; r < spec.seeds; ++r) {
        const std::uint64_t seed = spec.base_seed + r;
        const auto sc = generate_scenario(k, p, spec.rows, dists, spec.condition_max, noise, seed);
        IcaConfig cfg = spec.ica;
        cfg.n_components = k;
        cfg.seed = seed;
        const auto ica = fast_ica(sc.observed, cfg);
        conv += ica.converged;
        ica_scores.push_back(evaluate_recovery(sc, ica).amari);
        const auto pca = fit_pca(sc.observed, true, false);
        pca_scores.push_back(evaluate_recovery(sc, pca).amari);
      }
      auto row = [&](const char* method, const std::vector<double>& v, std::size_t c) {
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        out.push_back({label, noise, method, mean(v), *mn, *mx, c, v.size()});
      };
      row("ica", ica_scores, conv);
      row("pca", pca_scores, pca_scores.size());
    }
  }
  return out;
}

inline std::string emit_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "distributions,noise_sd,method,amari_mean,amari_min,amari_max,converged,runs\n";
  for (const auto& r : rows)
    os << r.distributions << ',' << format_number(r.noise_sd) << ',' << r.method << ','
       << format_number(r.amari_mean) << ',' << format_number(r.amari_min) << ','
       << format_number(r.amari_max) << ',' << r.converged << ',' << r.runs << '\n';
  return os.str();
}

}  // namespace nitrosep
