#include <gtest/gtest.h>

#include <cmath>

#include "nitrosep/diagnostics.hpp"
#include "test_support.hpp"

using namespace nitrosep;

namespace {

std::vector<double> alternating(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i % 2 ? -1.0 : 1.0;
  return v;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST(Acf, LagZeroAndAlternatingSeries) {
  const auto r = acf(alternating(20), 3);
  ASSERT_EQ(r.values.size(), 4u);
  EXPECT_EQ(r.values[0], 1.0);
  // Direct summation: 19 products of -1 over a lag-0 sum of 20.
  EXPECT_NEAR(r.values[1], -0.95, 1e-12);
  EXPECT_NEAR(r.values[2], 0.9, 1e-12);
  EXPECT_NEAR(r.conf_band, 1.96 / std::sqrt(20.0), 1e-15);
}

TEST(Acf, WhiteNoiseStaysInsideBand) {
  const auto r = acf(white_noise(500, 31), 20);
  std::size_t inside = 0;
  for (std::size_t h = 1; h <= 20; ++h) inside += std::abs(r.values[h]) < r.conf_band;
  EXPECT_GE(inside, 18u);
  for (double v : r.values) {
    EXPECT_LE(v, 1.0);
    EXPECT_GE(v, -1.0);
  }
}

TEST(Acf, Errors) {
  EXPECT_THROW(acf(std::vector<double>(10, 2.0), 2), ConstantSeries);
  EXPECT_THROW(acf(alternating(5), 4), TooShort);
  EXPECT_NO_THROW(acf(alternating(6), 4));
}

TEST(MutualInformation, ExactProductOfMarginalsIsZero) {
  // Every (x, y) cell of a 4 x 4 grid occurs equally often.
  std::vector<double> x, y;
  for (int rep = 0; rep < 3; ++rep)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        x.push_back(i);
        y.push_back(j * 2.5 - 1.0);
      }
  EXPECT_NEAR(mutual_information_discrete(x, y, 4), 0.0, 1e-12);
}

TEST(MutualInformation, IdentityGivesLog2Bins) {
  std::vector<double> x;
  for (int i = 0; i < 40; ++i) x.push_back(i);
  EXPECT_EQ(mutual_information_discrete(x, x, 2), 1.0);
  EXPECT_EQ(mutual_information_discrete(x, x, 4), 2.0);
}

TEST(MutualInformation, SymmetricAndNonNegative) {
  const auto a = white_noise(300, 1);
  auto b = white_noise(300, 2);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += 0.5 * a[i] * a[i];
  const double ab = mutual_information_discrete(a, b);
  EXPECT_NEAR(ab, mutual_information_discrete(b, a), 1e-12);
  EXPECT_GE(ab, -1e-12);
}

TEST(MutualInformation, Errors) {
  std::vector<double> x(12, 0.0), y(12, 0.0);
  for (int i = 0; i < 12; ++i) y[i] = i;
  EXPECT_THROW(mutual_information_discrete(x, y), DegenerateRange);
  EXPECT_THROW(mutual_information_discrete(y, x), DegenerateRange);
  EXPECT_THROW(mutual_information_discrete(y, std::vector<double>(11, 1.0)), LengthMismatch);
  EXPECT_THROW(mutual_information_discrete(y, y, 1), OutOfRange);
}

TEST(MoransI, RingCheckerboard) {
  EXPECT_NEAR(morans_i(alternating(10), ring_weights(10)), -1.0, 1e-10);
}

TEST(MoransI, AffineInvariance) {
  const auto v = white_noise(12, 4);
  std::vector<double> t;
  for (double x : v) t.push_back(-3.5 * x + 100.0);
  EXPECT_NEAR(morans_i(v, ring_weights(12)), morans_i(t, ring_weights(12)), 1e-10);
}

TEST(MoransI, Errors) {
  EXPECT_THROW(morans_i(std::vector<double>(5, 1.0), ring_weights(5)), ConstantField);
  EXPECT_THROW(morans_i(alternating(4), ring_weights(5)), ShapeMismatch);
  SpatialWeights w = ring_weights(4);
  w.weights(0, 0) = 1.0;
  EXPECT_THROW(morans_i(alternating(4), w), ShapeMismatch);
  SpatialWeights zero{4, Matrix(4, 4)};
  EXPECT_THROW(morans_i(alternating(4), zero), ShapeMismatch);
}

TEST(MoransI, PermutationMeanMatchesExpectation) {
  const auto v = white_noise(15, 9);
  const auto s = moran_permutation(v, ring_weights(15), 1000, 2);
  EXPECT_EQ(s.permutations, 1000u);
  EXPECT_NEAR(s.expected, -1.0 / 14.0, 1e-15);
  EXPECT_LE(std::abs(s.mean - s.expected), 3.0 * s.standard_error);
  const auto again = moran_permutation(v, ring_weights(15), 1000, 2);
  EXPECT_EQ(again.mean, s.mean);
}

TEST(Shuffle, IsAPermutation) {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7};
  RandomStream rng(3);
  shuffle_in_place(v, rng);
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<double>{1, 2, 3, 4, 5, 6, 7}));
}
