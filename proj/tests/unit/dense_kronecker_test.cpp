#include <gtest/gtest.h>

#include "ksgraph/dense_kronecker.hpp"
#include "ksgraph/error.hpp"
#include "test_util.hpp"

namespace ksgraph {
namespace {

Eigen::MatrixXd unit(Index d, Index i, Index j) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  m(i, j) = 1.0;
  return m;
}

Eigen::MatrixXd random_matrix(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = normal(rng);
  }
  return m;
}

TEST(DenseKronecker, KroneckerSumOfTwoDiagonals) {
  Eigen::MatrixXd a = Eigen::Vector2d(1, 2).asDiagonal();
  Eigen::MatrixXd b = Eigen::Vector2d(3, 4).asDiagonal();
  const std::vector<Eigen::MatrixXd> f{a, b};
  const Eigen::MatrixXd ks = dense::kronecker_sum(f);
  EXPECT_EQ(ks.diagonal(), Eigen::Vector4d(4, 5, 5, 6));
  EXPECT_EQ((ks - Eigen::MatrixXd(ks.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DenseKronecker, KroneckerSumMatchesExplicitLifts) {
  std::mt19937_64 rng(1);
  std::vector<Eigen::MatrixXd> f{testing::random_symmetric(2, rng), testing::random_symmetric(3, rng),
                                 testing::random_symmetric(2, rng)};
  const Eigen::MatrixXd expected = dense::kron(dense::kron(f[0], Eigen::MatrixXd::Identity(3, 3)),
                                               Eigen::MatrixXd::Identity(2, 2)) +
                                   dense::kron(Eigen::MatrixXd::Identity(2, 2),
                                               dense::kron(f[1], Eigen::MatrixXd::Identity(2, 2))) +
                                   dense::kron(Eigen::MatrixXd::Identity(6, 6), f[2]);
  EXPECT_NEAR((dense::kronecker_sum(f) - expected).cwiseAbs().maxCoeff(), 0.0, 1e-14);
  EXPECT_NEAR((dense::lift(f[1], 2, 2) -
               dense::kron(Eigen::MatrixXd::Identity(2, 2),
                           dense::kron(f[1], Eigen::MatrixXd::Identity(2, 2))))
                  .cwiseAbs()
                  .maxCoeff(),
              0.0, 0.0);
}

// Entry (i, j) of the blockwise trace pairs with the pattern I (x) J^{ij} (x) I
// through the ordinary trace.
TEST(DenseKronecker, BlockwiseTraceMatchesPatternDefinition) {
  std::mt19937_64 rng(4);
  const Index a = 2, d = 3, b = 2;
  const Eigen::MatrixXd m = random_matrix(a * d * b, a * d * b, rng);
  const Eigen::MatrixXd t = dense::blockwise_trace(m, a, b);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      const double expected = (m * dense::lift(unit(d, j, i), a, b)).trace();
      EXPECT_NEAR(t(i, j), expected, 1e-12);
    }
  }
  EXPECT_THROW(dense::blockwise_trace(m, 5, 1), StructuralError);
}

TEST(DenseKronecker, TraceAgainstLift) {
  std::mt19937_64 rng(6);
  const Index a = 3, d = 2, b = 2;
  const Eigen::MatrixXd m = random_matrix(a * d * b, a * d * b, rng);
  const Eigen::MatrixXd x = random_matrix(d, d, rng);
  EXPECT_NEAR((dense::lift(x, a, b) * m).trace(), (x * dense::blockwise_trace(m, a, b)).trace(),
              1e-12);
}

TEST(DenseKronecker, ExtractionProperty) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    const Index a = 1 + rep % 3, d = 3, b = 1 + (rep + 1) % 3;
    const Eigen::MatrixXd m = random_matrix(a * d * b, a * d * b, rng);
    const Eigen::MatrixXd x = random_matrix(d, d, rng);
    const Eigen::MatrixXd y = random_matrix(d, d, rng);
    const Eigen::MatrixXd lhs =
        dense::blockwise_trace(dense::lift(x, a, b) * m * dense::lift(y.transpose(), a, b), a, b);
    const Eigen::MatrixXd rhs = x * dense::blockwise_trace(m, a, b) * y.transpose();
    EXPECT_NEAR((lhs - rhs).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  }
}

TEST(DenseKronecker, CyclicProperty) {
  std::mt19937_64 rng(9);
  const Index a = 2, d = 3, b = 3;
  const Eigen::MatrixXd m = random_matrix(a * d * b, a * d * b, rng);
  const Eigen::MatrixXd outer = dense::kron(dense::kron(random_matrix(a, a, rng),
                                                        Eigen::MatrixXd::Identity(d, d)),
                                            random_matrix(b, b, rng));
  const Eigen::MatrixXd lhs = dense::blockwise_trace(outer * m, a, b);
  const Eigen::MatrixXd rhs = dense::blockwise_trace(m * outer, a, b);
  EXPECT_NEAR((lhs - rhs).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(DenseKronecker, DownsamplingProperty) {
  std::mt19937_64 rng(10);
  const Index a = 3, x = 2, d = 2, b = 3, y = 1;
  // Orthonormal columns give V^T U = I with U = V.
  Eigen::HouseholderQR<Eigen::MatrixXd> qa(random_matrix(a, x, rng));
  Eigen::HouseholderQR<Eigen::MatrixXd> qb(random_matrix(b, y, rng));
  const Eigen::MatrixXd u = qa.householderQ() * Eigen::MatrixXd::Identity(a, x);
  const Eigen::MatrixXd w = qb.householderQ() * Eigen::MatrixXd::Identity(b, y);
  const Eigen::MatrixXd m = random_matrix(x * d * y, x * d * y, rng);
  const Eigen::MatrixXd big = dense::kron(dense::kron(u, Eigen::MatrixXd::Identity(d, d)), w);
  const Eigen::MatrixXd lhs = dense::blockwise_trace(big * m * big.transpose(), a, b);
  EXPECT_NEAR((lhs - dense::blockwise_trace(m, x, y)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(DenseKronecker, SymmetricPseudoInverse) {
  Eigen::MatrixXd v(3, 1);
  v << 1, 2, 2;
  const Eigen::MatrixXd m = v * v.transpose();  // rank one, eigenvalue 9
  const Eigen::MatrixXd p = dense::symmetric_pinv(m);
  EXPECT_NEAR((p - m / 81.0).cwiseAbs().maxCoeff(), 0.0, 1e-14);
  EXPECT_NEAR((m * p * m - m).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

}  // namespace
}  // namespace ksgraph
