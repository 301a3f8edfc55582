#include <gtest/gtest.h>

#include "ksgraph/dense_kronecker.hpp"
#include "ksgraph/error.hpp"
#include "ksgraph/identify.hpp"
#include "test_util.hpp"

namespace ksgraph {
namespace {

using Row = std::vector<BigInt>;

std::vector<Row> rows(std::initializer_list<std::initializer_list<long>> r) {
  std::vector<Row> out;
  for (const auto& row : r) {
    Row x;
    for (long v : row) x.emplace_back(v);
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<std::vector<Rational>> rationals(std::initializer_list<std::initializer_list<long>> r) {
  std::vector<std::vector<Rational>> out;
  for (const auto& row : r) {
    std::vector<Rational> x;
    for (long v : row) x.emplace_back(v);
    out.push_back(std::move(x));
  }
  return out;
}

TEST(TraceStructure, MatrixVariate) {
  const TraceStructure t = build_trace_structure(build_structure({3, 2}, {{0, 1}}));
  EXPECT_EQ(t.m_matrix, rows({{2, 3}}));
  EXPECT_EQ(t.basis, rows({{2, 3}}));
  EXPECT_EQ(t.coefficients, rationals({{1}}));
  EXPECT_EQ(t.rank, 1u);
}

TEST(TraceStructure, TensorVariate) {
  const TraceStructure t = build_trace_structure(build_structure({2, 3, 5}, {{0, 1, 2}}));
  EXPECT_EQ(t.m_matrix, rows({{15, 10, 6}}));
  EXPECT_EQ(t.rank, 1u);
  EXPECT_EQ(t.coefficients, rationals({{1}}));
}

TEST(TraceStructure, StarSharedAxis) {
  const TraceStructure t =
      build_trace_structure(build_structure({4, 2, 3, 5}, {{0, 1}, {0, 2}, {0, 3}}));
  EXPECT_EQ(t.m_matrix, rows({{2, 4, 0, 0}, {3, 0, 4, 0}, {5, 0, 0, 4}}));
  EXPECT_EQ(t.basis, t.m_matrix);
  EXPECT_EQ(t.coefficients, rationals({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
}

TEST(TraceStructure, Triangle) {
  const TraceStructure t = build_trace_structure(build_structure({2, 3, 4}, {{0, 1}, {1, 2}, {2, 0}}));
  EXPECT_EQ(t.m_matrix, rows({{3, 2, 0}, {0, 4, 3}, {4, 0, 2}}));
  EXPECT_EQ(t.rank, 3u);
}

TEST(TraceStructure, ChainOfTensors) {
  const TraceStructure t = build_trace_structure(
      build_structure({2, 3, 4, 5}, {{0, 1}, {0, 1, 2}, {1, 2, 3}}));
  EXPECT_EQ(t.m_matrix, rows({{3, 2, 0, 0}, {12, 8, 6, 0}, {0, 20, 15, 12}}));
  EXPECT_EQ(t.rank, 3u);
}

TEST(TraceStructure, SameAxesTwice) {
  const TraceStructure t = build_trace_structure(build_structure({3, 2}, {{0, 1}, {1, 0}}));
  EXPECT_EQ(t.rank, 1u);
  EXPECT_EQ(t.basis, rows({{2, 3}}));
  EXPECT_EQ(t.coefficients, rationals({{1}, {1}}));
  EXPECT_EQ(t.basis_modalities, std::vector<std::size_t>{0});
}

TEST(TraceStructure, DependentFourAxisModality) {
  const Index d1 = 2, d2 = 3, d3 = 4, d4 = 5;
  const TraceStructure t = build_trace_structure(
      build_structure({d1, d2, d3, d4}, {{0, 1}, {2, 3}, {0, 1, 2, 3}}));
  EXPECT_EQ(t.rank, 2u);
  EXPECT_EQ(t.basis, rows({{3, 2, 0, 0}, {0, 0, 5, 4}}));
  EXPECT_EQ(t.coefficients, rationals({{1, 0}, {0, 1}, {d3 * d4, d1 * d2}}));
  // Shift coefficients relate identity multiples instead of traces.
  EXPECT_EQ(t.shift_coefficients[2][0], Rational(1));
  EXPECT_EQ(t.shift_coefficients[2][1], Rational(1));
  const Eigen::MatrixXd c = t.coefficient_matrix();
  EXPECT_EQ(c(2, 0), 20.0);
  EXPECT_EQ(c(2, 1), 6.0);
}

TEST(TraceStructure, HugeProductsStayExact) {
  const Index big = Index{1} << 20;
  const TraceStructure t =
      build_trace_structure(build_structure({big, big, big}, {{0, 1}, {0, 1, 2}}));
  EXPECT_EQ(t.rank, 2u);
  EXPECT_EQ(t.m_matrix[1][0], BigInt(big) * BigInt(big));
}

// Every rowspace relation reproduces the trace matrix.
TEST(TraceStructure, CoefficientsReproduceRows) {
  const auto s = build_structure({2, 3, 2, 3}, {{0, 1}, {2, 3}, {0, 1, 2, 3}, {1, 0}, {0, 3}});
  const TraceStructure t = build_trace_structure(s);
  for (std::size_t g = 0; g < s.modality_count(); ++g) {
    for (std::size_t l = 0; l < s.axis_count(); ++l) {
      Rational sum = 0;
      for (std::size_t i = 0; i < t.rank; ++i) sum += t.coefficients[g][i] * Rational(t.basis[i][l]);
      EXPECT_EQ(sum, Rational(t.m_matrix[g][l]));
    }
  }
}

std::vector<Eigen::MatrixXd> lifted(const std::vector<Eigen::MatrixXd>& f, const ModalityLayout& m) {
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t a : m.axes) out.push_back(f[a]);
  return out;
}

TEST(Identifiable, ReconstructsEveryModality) {
  std::mt19937_64 rng(3);
  const auto s = build_structure({3, 2, 2}, {{0, 1}, {1, 2}, {0, 1, 2}});
  const TraceStructure t = build_trace_structure(s);
  std::vector<Eigen::MatrixXd> f;
  for (Index d : s.axis_length) f.push_back(testing::random_symmetric(d, rng));
  const IdentifiableFactors id = to_identifiable(f, s, t);
  for (std::size_t l = 0; l < f.size(); ++l) EXPECT_NEAR(id.factors[l].trace(), 0.0, 1e-12);
  for (std::size_t g = 0; g < s.modality_count(); ++g) {
    const Eigen::MatrixXd raw = dense::kronecker_sum(lifted(f, s.modalities[g]));
    Eigen::MatrixXd rebuilt = dense::kronecker_sum(lifted(id.factors, s.modalities[g]));
    rebuilt.diagonal().array() += id.parameters.modality_shift[g];
    EXPECT_NEAR((raw - rebuilt).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_NEAR(raw.trace(), id.parameters.modality_trace[g], 1e-12);
  }
  ASSERT_EQ(id.parameters.t.size(), t.rank);
  // Dependent modalities follow from the basis ones.
  const Eigen::MatrixXd coeff = t.coefficient_matrix();
  const Eigen::Map<const Eigen::VectorXd> tv(id.parameters.t.data(), static_cast<Eigen::Index>(t.rank));
  for (std::size_t g = 0; g < s.modality_count(); ++g) {
    EXPECT_NEAR(coeff.row(static_cast<Eigen::Index>(g)).dot(tv), id.parameters.modality_trace[g], 1e-10);
  }
}

TEST(Identifiable, TraceZeroFactorsAreUnchanged) {
  const auto s = build_structure({2, 2}, {{0, 1}});
  const TraceStructure t = build_trace_structure(s);
  Eigen::MatrixXd a(2, 2);
  a << 1, 0.5, 0.5, -1;
  const IdentifiableFactors id = to_identifiable({a, -a}, s, t);
  EXPECT_EQ(id.factors[0], a);
  EXPECT_EQ(id.factors[1], -a);
  EXPECT_EQ(id.parameters.modality_trace[0], 0.0);
}

TEST(Identifiable, IdentityFactors) {
  const auto s = build_structure({2, 2}, {{0, 1}});
  const TraceStructure t = build_trace_structure(s);
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  const IdentifiableFactors id = to_identifiable({i2, i2}, s, t);
  EXPECT_DOUBLE_EQ(id.parameters.modality_trace[0], 8.0);
  EXPECT_DOUBLE_EQ(id.parameters.modality_shift[0], 2.0);
  EXPECT_EQ(id.factors[0], Eigen::MatrixXd::Zero(2, 2));
}

TEST(Identifiable, ShiftInvariance) {
  std::mt19937_64 rng(4);
  const auto s = build_structure({3, 4}, {{0, 1}});
  const TraceStructure t = build_trace_structure(s);
  std::vector<Eigen::MatrixXd> f{testing::random_symmetric(3, rng), testing::random_symmetric(4, rng)};
  const IdentifiableFactors base = to_identifiable(f, s, t);
  const double c = 1.7;
  std::vector<Eigen::MatrixXd> g = f;
  g[0].diagonal().array() += c;
  g[1].diagonal().array() -= c;
  EXPECT_NEAR((dense::kronecker_sum(f) - dense::kronecker_sum(g)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  const IdentifiableFactors moved = to_identifiable(g, s, t);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_NEAR((base.factors[l] - moved.factors[l]).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  }
  EXPECT_NEAR(base.parameters.modality_trace[0], moved.parameters.modality_trace[0], 1e-12);
}

TEST(Identifiable, SpectralTraceParametersMatchDense) {
  std::mt19937_64 rng(5);
  const auto s = build_structure({3, 4}, {{0, 1}});
  const TraceStructure t = build_trace_structure(s);
  const AxisVectors lambda{Eigen::Vector3d(1.0, 2.0, 0.5), Eigen::Vector4d(0.1, 0.2, 0.3, 0.4)};
  std::vector<Eigen::MatrixXd> f;
  for (const auto& v : lambda) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(testing::random_symmetric(v.size(), rng));
    const Eigen::MatrixXd q = qr.householderQ();
    f.push_back(q * v.asDiagonal() * q.transpose());
  }
  const TraceParameters spectral = trace_parameters(lambda, s, t);
  const TraceParameters dense_p = to_identifiable(f, s, t).parameters;
  EXPECT_NEAR(spectral.modality_trace[0], dense_p.modality_trace[0], 1e-12);
  EXPECT_NEAR(spectral.axis_shift[1], 0.25, 1e-15);
  EXPECT_THROW(to_identifiable({f[0]}, s, t), StructuralError);
}

}  // namespace
}  // namespace ksgraph
