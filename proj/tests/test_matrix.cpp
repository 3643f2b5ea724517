#include <gtest/gtest.h>

#include <cmath>

#include "nitrosep/matrix.hpp"
#include "test_support.hpp"

using namespace nitrosep;
using nitrosep::testing::brute_force_covariance;
using nitrosep::testing::max_abs_diff;
using nitrosep::testing::random_matrix;
using nitrosep::testing::random_symmetric;

TEST(CenterScale, MeanSubtraction) {
  const Matrix out = center_scale(Matrix{{1}, {3}}, true, false);
  EXPECT_DOUBLE_EQ(out(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(out(1, 0), 1.0);
}

TEST(CenterScale, UsesSampleStandardDeviation) {
  const Matrix out = center_scale(Matrix{{1}, {3}}, true, true);
  EXPECT_NEAR(out(0, 0), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(out(1, 0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(CenterScale, ConstantColumnIsRejected) {
  try {
    center_scale(Matrix{{5, 1}, {5, 2}}, false, true);
    FAIL() << "expected ZeroVarianceColumn";
  } catch (const ZeroVarianceColumn& e) {
    EXPECT_EQ(e.column(), 0u);
  }
}

TEST(CenterScale, PostconditionsOnRandomData) {
  const Matrix x = random_matrix(17, 5, 11);
  const Matrix out = center_scale(x, true, true);
  for (std::size_t c = 0; c < out.cols(); ++c) {
    const auto col = out.col(c);
    EXPECT_NEAR(mean(col), 0.0, 1e-12);
    EXPECT_NEAR(sample_sd(col), 1.0, 1e-12);
  }
  EXPECT_THROW(center_scale(Matrix{{1.0, 2.0}}, true, false), TooFewRows);
}

TEST(Covariance, IdenticalColumns) {
  const Matrix s = covariance_matrix(Matrix{{0, 0}, {1, 1}});
  for (double v : s.data()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Covariance, ConstantColumnGivesZeroRowAndColumn) {
  const Matrix s = covariance_matrix(Matrix{{1, 7}, {2, 7}, {4, 7}});
  EXPECT_EQ(s(0, 1), 0.0);
  EXPECT_EQ(s(1, 0), 0.0);
  EXPECT_EQ(s(1, 1), 0.0);
}

TEST(Covariance, MatchesBruteForceOracle) {
  const Matrix x = random_matrix(5, 3, 7);
  EXPECT_LE(max_abs_diff(covariance_matrix(x), brute_force_covariance(x)), 1e-12);
  EXPECT_THROW(covariance_matrix(Matrix{{1, 2}}), TooFewRows);
}

TEST(Covariance, PositiveSemiDefinite) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    // fewer rows than columns forces exact zero eigenvalues
    const Matrix x = random_matrix(4 + seed % 6, 7, seed);
    for (double v : sym_eigen(covariance_matrix(x)).values) EXPECT_GE(v, -1e-9);
  }
}

TEST(Correlation, ExactCorrelationAndAntiCorrelation) {
  EXPECT_DOUBLE_EQ(correlation_matrix(Matrix{{1, 1}, {2, 2}, {5, 5}})(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(correlation_matrix(Matrix{{1, -1}, {2, -2}, {3, -3}})(0, 1), -1.0);
  EXPECT_THROW(correlation_matrix(Matrix{{1, 3}, {2, 3}}), ZeroVarianceColumn);
}

TEST(Correlation, EqualsCovarianceOfStandardizedData) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const Matrix x = random_matrix(6, 4, seed);
    const Matrix r = correlation_matrix(x);
    EXPECT_LE(max_abs_diff(r, covariance_matrix(center_scale(x, true, true))), 1e-12);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(r(i, i), 1.0, 1e-12);
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_LE(std::abs(r(i, j)), 1.0);
        EXPECT_EQ(r(i, j), r(j, i));
      }
    }
  }
}

namespace {

void expect_eigen_invariants(const Matrix& s, const EigenDecomposition& e) {
  const std::size_t n = s.rows();
  const Matrix vtv = e.vectors.transpose() * e.vectors;
  EXPECT_LE(max_abs_diff(vtv, Matrix::identity(n)), 1e-10);
  const double bound = 1e-8 * std::max(1.0, max_abs(s));
  for (std::size_t i = 0; i < n; ++i) {
    double worst = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double sv = 0.0;
      for (std::size_t k = 0; k < n; ++k) sv += s(r, k) * e.vectors(k, i);
      worst = std::max(worst, std::abs(sv - e.values[i] * e.vectors(r, i)));
    }
    EXPECT_LE(worst, bound) << "eigenpair " << i;
    if (i > 0) {
      EXPECT_LE(e.values[i], e.values[i - 1]);
    }
  }
  double sum = 0.0;
  for (double v : e.values) sum += v;
  EXPECT_NEAR(sum, trace(s), 1e-8);
}

}  // namespace

TEST(SymEigen, Identity) {
  const auto e = sym_eigen(Matrix::identity(3));
  for (double v : e.values) EXPECT_DOUBLE_EQ(v, 1.0);
  expect_eigen_invariants(Matrix::identity(3), e);
}

TEST(SymEigen, DiagonalIsAxisAligned) {
  const Matrix s{{1, 0}, {0, 2}};
  const auto e = sym_eigen(s);
  EXPECT_DOUBLE_EQ(e.values[0], 2.0);
  EXPECT_DOUBLE_EQ(e.values[1], 1.0);
  EXPECT_DOUBLE_EQ(std::abs(e.vectors(1, 0)), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(e.vectors(0, 1)), 1.0);
}

TEST(SymEigen, RandomSymmetricResidualAndTrace) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix s = random_symmetric(8, seed);
    expect_eigen_invariants(s, sym_eigen(s));
  }
}

TEST(SymEigen, DegenerateSpectrumSpansEigenspace) {
  // 3 * e1 e1^T + 1 * I: eigenvalue 1 has a 2-dimensional eigenspace
  // orthogonal to u.
  const double u[3] = {1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
  Matrix s = Matrix::identity(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s(i, j) += 3.0 * u[i] * u[j];
  const auto e = sym_eigen(s);
  EXPECT_NEAR(e.values[0], 4.0, 1e-12);
  for (int c = 1; c < 3; ++c) {
    double dot = 0.0;
    for (int r = 0; r < 3; ++r) dot += e.vectors(r, c) * u[r];
    EXPECT_NEAR(dot, 0.0, 1e-10);
  }
}

TEST(SymEigen, SignConventionAndBitDeterminism) {
  const Matrix s = random_symmetric(9, 42);
  const auto a = sym_eigen(s);
  const auto b = sym_eigen(s);
  EXPECT_EQ(a.values, b.values);
  EXPECT_TRUE(a.vectors == b.vectors);
  for (std::size_t c = 0; c < 9; ++c) {
    std::size_t arg = 0;
    for (std::size_t r = 1; r < 9; ++r)
      if (std::abs(a.vectors(r, c)) > std::abs(a.vectors(arg, c))) arg = r;
    EXPECT_GT(a.vectors(arg, c), 0.0);
  }
}

TEST(SymEigen, RejectsAsymmetricInput) {
  EXPECT_THROW(sym_eigen(Matrix{{1, 2}, {0, 1}}), NotSymmetric);
  EXPECT_THROW(sym_eigen(Matrix{{1, 2, 3}}), NotSymmetric);
}

TEST(Svd, SimpleCases) {
  const auto id = svd(Matrix::identity(2));
  EXPECT_DOUBLE_EQ(id.sigma[0], 1.0);
  EXPECT_DOUBLE_EQ(id.sigma[1], 1.0);
  const auto d = svd(Matrix{{3, 0}, {0, 0}});
  EXPECT_DOUBLE_EQ(d.sigma[0], 3.0);
  EXPECT_DOUBLE_EQ(d.sigma[1], 0.0);
  const Matrix rec = d.u * Matrix::diagonal(d.sigma) * d.v.transpose();
  EXPECT_LE(max_abs_diff(rec, Matrix{{3, 0}, {0, 0}}), 1e-15);
}

TEST(Svd, SquaredSingularValuesMatchGramEigenvalues) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = random_matrix(6, 3, seed);
    const auto d = svd(x);
    const auto e = sym_eigen(x.transpose() * x);
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_NEAR(d.sigma[i] * d.sigma[i], e.values[i], 1e-8 * std::max(1.0, e.values[i]));
  }
}

TEST(Svd, ReconstructsTallAndWideMatrices) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t r = 1 + seed % 50;
    const std::size_t c = 1 + (seed * 7) % 20;
    const Matrix x = random_matrix(r, c, seed);
    const auto d = svd(x);
    const Matrix rec = d.u * Matrix::diagonal(d.sigma) * d.v.transpose();
    EXPECT_LE(max_abs_diff(rec, x), 1e-8 * std::max(1.0, max_abs(x))) << r << "x" << c;
    for (std::size_t i = 0; i < d.sigma.size(); ++i) {
      EXPECT_GE(d.sigma[i], 0.0);
      if (i) {
        EXPECT_LE(d.sigma[i], d.sigma[i - 1]);
      }
    }
    EXPECT_LE(max_abs_diff(d.u.transpose() * d.u, Matrix::identity(d.sigma.size())), 1e-10);
    EXPECT_LE(max_abs_diff(d.v.transpose() * d.v, Matrix::identity(d.sigma.size())), 1e-10);
  }
}

TEST(Svd, ResolvesExactRankDeficiency) {
  Matrix x = random_matrix(30, 3, 5);
  for (std::size_t r = 0; r < x.rows(); ++r) x(r, 2) = x(r, 0);
  const auto d = svd(x);
  EXPECT_LT(d.sigma[2], 1e-12 * d.sigma[0]);
}

TEST(Inverse, GaussJordanAndPseudoInverse) {
  const Matrix a = random_matrix(4, 4, 3);
  EXPECT_LE(max_abs_diff(a * inverse(a), Matrix::identity(4)), 1e-12);
  EXPECT_THROW(inverse(Matrix{{1, 2}, {2, 4}}), Singular);
  const Matrix tall = random_matrix(6, 3, 9);
  EXPECT_LE(max_abs_diff(pseudo_inverse(tall) * tall, Matrix::identity(3)), 1e-12);
}
