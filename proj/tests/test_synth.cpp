#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "nitrosep/synth.hpp"
#include "test_support.hpp"

using namespace nitrosep;
using nitrosep::testing::max_abs_diff;

namespace {

const std::vector<SourceDist> kTwoUniform{SourceDist::uniform, SourceDist::uniform};

}  // namespace

TEST(GenerateScenario, NoiselessObservedIsExactProduct) {
  const auto sc = generate_scenario(2, 2, 1000, kTwoUniform, 10.0, 0.0, 5);
  EXPECT_TRUE(sc.observed == sc.sources * sc.mixing.transpose());
  EXPECT_LE(condition_number(sc.mixing), 10.0);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(mean(sc.sources.col(c)), 0.0, 1e-12);
    EXPECT_NEAR(sample_sd(sc.sources.col(c)), 1.0, 1e-12);
    for (double v : sc.sources.col(c)) EXPECT_LE(std::abs(v), 2.0);
  }
}

TEST(GenerateScenario, BitDeterministic) {
  const std::vector<SourceDist> d{SourceDist::laplace, SourceDist::gaussian, SourceDist::uniform};
  const auto a = generate_scenario(3, 4, 500, d, 10.0, 0.1, 99);
  const auto b = generate_scenario(3, 4, 500, d, 10.0, 0.1, 99);
  EXPECT_TRUE(a.observed == b.observed);
  EXPECT_TRUE(a.mixing == b.mixing);
  EXPECT_FALSE(a.observed == generate_scenario(3, 4, 500, d, 10.0, 0.1, 100).observed);
}

TEST(GenerateScenario, AddingASourceKeepsExistingColumns) {
  const auto two = generate_scenario(2, 3, 300, {SourceDist::laplace, SourceDist::uniform}, 1e9, 0.0, 7);
  const auto three = generate_scenario(
      3, 3, 300, {SourceDist::laplace, SourceDist::uniform, SourceDist::gaussian}, 1e9, 0.0, 7);
  EXPECT_EQ(two.sources.col(0), three.sources.col(0));
  EXPECT_EQ(two.sources.col(1), three.sources.col(1));
}

TEST(GenerateScenario, SourcesAreNearlyUncorrelated) {
  const auto sc = generate_scenario(2, 2, 5000, {SourceDist::gaussian, SourceDist::uniform}, 10.0, 0.0, 13);
  EXPECT_LT(std::abs(pearson(sc.sources.col(0), sc.sources.col(1))), 0.05);
  const auto wide = generate_scenario(3, 3, 1000, {SourceDist::laplace, SourceDist::uniform, SourceDist::gaussian},
                                      10.0, 0.0, 14);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      EXPECT_LT(std::abs(pearson(wide.sources.col(i), wide.sources.col(j))), 0.1);
}

TEST(GenerateScenario, Errors) {
  EXPECT_THROW(generate_scenario(3, 2, 1000, {SourceDist::uniform, SourceDist::uniform, SourceDist::uniform}, 10, 0, 1),
               InvalidConfig);
  EXPECT_THROW(generate_scenario(2, 2, 99, kTwoUniform, 10, 0, 1), TooFewRows);
  EXPECT_THROW(generate_scenario(2, 2, 1000, {SourceDist::uniform}, 10, 0, 1), LengthMismatch);
  EXPECT_THROW(generate_scenario(2, 2, 1000, kTwoUniform, 1.0, 0, 1), ConditioningFailed);
  EXPECT_THROW(parse_source_dist("cauchy"), InvalidConfig);
  EXPECT_EQ(parse_source_dist("laplace"), SourceDist::laplace);
}

TEST(EvaluateRecovery, IcaRecoversUniformSources) {
  const auto sc = generate_scenario(2, 2, 5000, kTwoUniform, 10.0, 0.0, 1);
  IcaConfig cfg;
  cfg.seed = 1;
  const auto rep = evaluate_recovery(sc, fast_ica(sc.observed, cfg));
  EXPECT_LT(rep.amari, 0.05);
  EXPECT_GT(rep.min_best_match, 0.95);
}

TEST(EvaluateRecovery, PcaCannotUnmixObliqueMixture) {
  // Pick a seed whose mixing has clearly non-orthogonal columns.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto sc = generate_scenario(2, 2, 5000, kTwoUniform, 10.0, 0.0, seed);
    const double c = std::abs(pearson(sc.mixing.col(0), sc.mixing.col(1)));
    if (c < 0.5) continue;
    const auto rep = evaluate_recovery(sc, fit_pca(sc.observed, true, false));
    EXPECT_GT(rep.amari, 0.1) << "seed " << seed;
    return;
  }
  FAIL() << "no oblique mixing among 50 seeds";
}

// For two sources the recovered pair is a rotation of the truth, so the greedy
// best match is max(|cos t|, |sin t|) >= 1/sqrt(2); the spread across seeds is
// bounded by 1 - 1/sqrt(2).
TEST(EvaluateRecovery, GaussianSourcesAreNotIdentifiable) {
  std::vector<double> matches;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sc = generate_scenario(2, 2, 5000, {SourceDist::gaussian, SourceDist::gaussian}, 10.0, 0.0, seed);
    IcaConfig cfg;
    cfg.seed = seed;
    matches.push_back(evaluate_recovery(sc, fast_ica(sc.observed, cfg)).min_best_match);
  }
  const auto [lo, hi] = std::minmax_element(matches.begin(), matches.end());
  EXPECT_GT(*hi - *lo, 0.2);
  EXPECT_GE(*lo, 1.0 / std::sqrt(2.0) - 0.02);
}

TEST(EvaluateRecovery, ShapeMismatch) {
  const auto sc = generate_scenario(2, 2, 1000, kTwoUniform, 10.0, 0.0, 1);
  const auto other = generate_scenario(2, 3, 1000, kTwoUniform, 10.0, 0.0, 1);
  EXPECT_THROW(evaluate_recovery(sc, fit_pca(other.observed, true, false)), ShapeMismatch);
  IcaConfig cfg;
  EXPECT_THROW(evaluate_recovery(sc, fast_ica(other.observed, cfg)), ShapeMismatch);
}

TEST(EvaluateRecovery, Deterministic) {
  const auto sc = generate_scenario(2, 2, 2000, kTwoUniform, 10.0, 0.1, 4);
  IcaConfig cfg;
  cfg.seed = 4;
  const auto a = evaluate_recovery(sc, fast_ica(sc.observed, cfg));
  const auto b = evaluate_recovery(sc, fast_ica(sc.observed, cfg));
  EXPECT_EQ(a.amari, b.amari);
  EXPECT_EQ(a.best_match, b.best_match);
}

TEST(RunSweep, NoiseMonotonicityForUniformSources) {
  SweepSpec spec;
  spec.distribution_sets = {kTwoUniform};
  spec.rows = 2000;
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 6u);
  std::vector<double> ica_means;
  for (const auto& r : rows)
    if (r.method == "ica") ica_means.push_back(r.amari_mean);
  ASSERT_EQ(ica_means.size(), 3u);
  EXPECT_LE(ica_means[0], ica_means[1]);
  EXPECT_LE(ica_means[1], ica_means[2]);
  const std::string csv = emit_sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "distributions,noise_sd,method,amari_mean,amari_min,amari_max,converged,runs");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_EQ(emit_sweep_csv(run_sweep(spec)), csv);
}
