#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mslkit/eigen.hpp"
#include "test_util.hpp"

using namespace mslkit;
using mslkit::testing::naive_matmul;

namespace {

Matrix mat(std::size_t r, std::size_t c, std::vector<double> d) { return Matrix(r, c, std::move(d)); }

Matrix random_symmetric(std::mt19937_64& rng, std::size_t n) {
  Matrix a = mslkit::testing::random_matrix(rng, n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
  return a;
}

// max_j ||C v_j - lambda_j v_j||_inf
double residual(const Matrix& c, const EigenResult& e) {
  const Matrix cv = naive_matmul(c, e.vectors);
  double worst = 0.0;
  for (std::size_t j = 0; j < e.values.size(); ++j)
    for (std::size_t i = 0; i < c.rows(); ++i)
      worst = std::max(worst, std::abs(cv(i, j) - e.values[j] * e.vectors(i, j)));
  return worst;
}

double orthonormality_error(const Matrix& v) {
  const Matrix g = naive_matmul(v.transpose(), v);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

}  // namespace

TEST(SymEig, Diagonal) {
  const EigenResult e = sym_eig(mat(2, 2, {3, 0, 0, 1}));
  EXPECT_EQ(e.values, (std::vector<double>{3, 1}));
  EXPECT_EQ(e.vectors, Matrix::identity(2));
}

TEST(SymEig, TwoByTwoByHand) {
  const EigenResult e = sym_eig(mat(2, 2, {2, 1, 1, 2}));
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(e.vectors(0, 0), h, 1e-14);
  EXPECT_NEAR(e.vectors(1, 0), h, 1e-14);
  // second column is +-[1,-1]/sqrt2; both entries tie in magnitude so the
  // earliest one is the non-negative one
  EXPECT_NEAR(e.vectors(0, 1), h, 1e-14);
  EXPECT_NEAR(e.vectors(1, 1), -h, 1e-14);
}

TEST(SymEig, IdentityViaResidual) {
  const EigenResult e = sym_eig(Matrix::identity(7));
  for (double v : e.values) EXPECT_NEAR(v, 1.0, 1e-15);
  EXPECT_LE(residual(Matrix::identity(7), e), 1e-14);
  EXPECT_LE(orthonormality_error(e.vectors), 1e-14);
}

TEST(SymEig, RejectsNonSquareAndAsymmetric) {
  EXPECT_THROW(sym_eig(Matrix(2, 3)), InvalidArgument);
  EXPECT_THROW(sym_eig(mat(2, 2, {1, 2, 3, 4})), InvalidArgument);
}

TEST(SymEig, BudgetExhaustionIsNumericalError) {
  std::mt19937_64 rng(3);
  JacobiOptions tight;
  tight.max_sweeps = 1;
  try {
    sym_eig(random_symmetric(rng, 12), tight);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& err) {
    EXPECT_NE(std::string(err.what()).find("residual"), std::string::npos);
  }
}

TEST(SymEigProperties, ResidualOrthonormalityOrderingSign) {
  std::mt19937_64 rng(17);
  for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 16u, 33u, 64u}) {
    for (int trial = 0; trial < 3; ++trial) {
      const Matrix c = random_symmetric(rng, n);
      const EigenResult e = sym_eig(c);
      double scale = 1.0;
      for (double v : e.values) scale = std::max(scale, std::abs(v));
      EXPECT_LE(residual(c, e), 1e-8 * scale) << "n=" << n;
      EXPECT_LE(orthonormality_error(e.vectors), 1e-10);
      for (std::size_t j = 1; j < n; ++j) EXPECT_GE(e.values[j - 1], e.values[j]);
      for (std::size_t j = 0; j < n; ++j) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
          if (std::abs(e.vectors(i, j)) > std::abs(e.vectors(best, j))) best = i;
        EXPECT_GE(e.vectors(best, j), 0.0);
      }
    }
  }
}

TEST(SymEigProperties, Deterministic) {
  std::mt19937_64 rng(5);
  const Matrix c = random_symmetric(rng, 20);
  const EigenResult a = sym_eig(c), b = sym_eig(c);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.vectors, b.vectors);
}

TEST(EnergyRank, CumulativeFractions) {
  const std::vector<double> v{9, 0.5, 0.5};
  EXPECT_EQ(energy_rank(v, 0.96), 3u);
  EXPECT_EQ(energy_rank(v, 0.90), 1u);
  EXPECT_EQ(energy_rank(v, 0.95), 2u);
}

TEST(EnergyRank, FullEnergyStopsAtLastPositive) {
  EXPECT_EQ(energy_rank(std::vector<double>{4, 2, 1, 0, 0}, 1.0), 3u);
  EXPECT_EQ(energy_rank(std::vector<double>{4, 2, 1, -1e-18}, 1.0), 3u);
}

TEST(EnergyRank, Errors) {
  EXPECT_THROW(energy_rank(std::vector<double>{0, 0}, 0.5), InvalidArgument);
  EXPECT_THROW(energy_rank(std::vector<double>{}, 0.5), InvalidArgument);
  EXPECT_THROW(energy_rank(std::vector<double>{1}, 0.0), InvalidArgument);
  EXPECT_THROW(energy_rank(std::vector<double>{1}, 1.5), InvalidArgument);
}

TEST(WhitenBasis, DiagonalScaling) {
  const Matrix w = whiten_basis(sym_eig(mat(2, 2, {4, 0, 0, 1})), 2);
  EXPECT_EQ(w, mat(2, 2, {0.5, 0, 0, 1}));
}

TEST(WhitenBasis, IdentitySpectrumKeepsColumns) {
  const EigenResult e = sym_eig(Matrix::identity(4));
  for (std::size_t r = 1; r <= 4; ++r) {
    const Matrix w = whiten_basis(e, r);
    EXPECT_EQ(w, e.vectors.left_columns(r));
  }
}

TEST(WhitenBasis, FloorPreventsInfinity) {
  EigenResult e{{1.0, 0.0}, Matrix::identity(2)};
  const Matrix w = whiten_basis(e, 2);
  EXPECT_TRUE(std::isfinite(w(1, 1)));
  EXPECT_DOUBLE_EQ(w(1, 1), 1.0 / std::sqrt(1e-10));
}

TEST(WhitenBasis, RankOutOfRange) {
  const EigenResult e = sym_eig(Matrix::identity(3));
  EXPECT_THROW(whiten_basis(e, 0), InvalidArgument);
  EXPECT_THROW(whiten_basis(e, 4), InvalidArgument);
}

TEST(WhitenBasisProperties, WhitenedCovarianceIsIdentity) {
  std::mt19937_64 rng(23);
  for (std::size_t n : {2u, 5u, 13u, 32u, 64u}) {
    const Matrix c = mslkit::testing::random_spd(rng, n);
    const Matrix w = whiten_basis(sym_eig(c), n);
    const Matrix g = naive_matmul(naive_matmul(w.transpose(), c), w);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    EXPECT_LE(worst, 1e-8) << "n=" << n;
  }
}

TEST(GenEig, IdentityWithinReducesToSymEig) {
  const EigenResult e = solve_gen_eig(mat(2, 2, {8, 0, 0, 2}), Matrix::identity(2), 0.0);
  EXPECT_NEAR(e.values[0], 8.0, 1e-14);
  EXPECT_NEAR(e.values[1], 2.0, 1e-14);
  EXPECT_EQ(e.vectors, Matrix::identity(2));
}

TEST(GenEig, DiagonalPencil) {
  const EigenResult e = solve_gen_eig(mat(2, 2, {4, 0, 0, 0}), mat(2, 2, {2, 0, 0, 1}), 0.0);
  EXPECT_NEAR(e.values[0], 2.0, 1e-14);
  EXPECT_NEAR(e.values[1], 0.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(e.vectors(1, 0), 0.0, 1e-14);
}

TEST(GenEig, SingularWithinRegularized) {
  std::mt19937_64 rng(41);
  const std::size_t n = 6;
  // rank-2 within scatter, rank-3 between scatter
  const Matrix a = mslkit::testing::random_matrix(rng, n, 2);
  const Matrix b = mslkit::testing::random_matrix(rng, n, 3);
  const Matrix s_w = naive_matmul(a, a.transpose());
  const Matrix s_b = naive_matmul(b, b.transpose());
  const double gamma = 1e-4;
  EXPECT_THROW(solve_gen_eig(s_b, s_w, 0.0), NumericalError);
  const EigenResult e = solve_gen_eig(s_b, s_w, gamma);
  Matrix reg = s_w;
  const double shift = gamma * (s_w.trace() + s_b.trace()) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) reg(i, i) += shift;
  const Matrix bv = naive_matmul(s_b, e.vectors);
  const Matrix wv = naive_matmul(reg, e.vectors);
  for (std::size_t j = 0; j < n; ++j) {
    ASSERT_TRUE(std::isfinite(e.values[j]));
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += std::pow(bv(i, j) - e.values[j] * wv(i, j), 2);
    EXPECT_LE(std::sqrt(r), 1e-6) << "pair " << j;
  }
}

TEST(GenEig, ZeroWithinUsesBetweenScale) {
  // shift = 0.5 * trace(diag(3, 1)) / 2 = 1
  const EigenResult e = solve_gen_eig(mat(2, 2, {3, 0, 0, 1}), Matrix(2, 2), 0.5);
  EXPECT_NEAR(e.values[0], 3.0, 1e-13);
  EXPECT_NEAR(e.values[1], 1.0, 1e-13);
  // both zero: plain gamma
  const EigenResult z = solve_gen_eig(Matrix(2, 2), Matrix(2, 2), 0.5);
  EXPECT_EQ(z.values, (std::vector<double>{0, 0}));
}

TEST(GenEig, RoundOffWithinDoesNotDominate) {
  // S_w at round-off level must not reorder the discriminant directions
  Matrix s_w = mat(2, 2, {1e-15, 0, 0, 3e-16});
  const EigenResult e = solve_gen_eig(mat(2, 2, {2, 0, 0, 1}), s_w, 1e-6);
  EXPECT_NEAR(e.values[1] / e.values[0], 0.5, 1e-6);
}

TEST(GenEigProperties, IdentityWithinMatchesSymEig) {
  std::mt19937_64 rng(29);
  for (std::size_t n : {3u, 10u, 25u}) {
    const Matrix s_b = mslkit::testing::random_spd(rng, n);
    const EigenResult g = solve_gen_eig(s_b, Matrix::identity(n), 0.0);
    const EigenResult s = sym_eig(s_b);
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_NEAR(g.values[j], s.values[j], 1e-10 * std::max(1.0, s.values[0]));
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(g.vectors(i, j), s.vectors(i, j), 1e-10);
    }
  }
}

TEST(Cholesky, FactorReproducesMatrix) {
  std::mt19937_64 rng(8);
  const Matrix a = mslkit::testing::random_spd(rng, 9);
  const Matrix l = cholesky(a);
  const Matrix llt = naive_matmul(l, l.transpose());
  EXPECT_LE(mslkit::testing::max_abs_diff(llt.data(), a.data()), 1e-12 * a.max_abs());
  EXPECT_THROW(cholesky(mat(2, 2, {1, 0, 0, -1})), NumericalError);
}
