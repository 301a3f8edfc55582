#include "ksgraph/dense_kronecker.hpp"

#include "ksgraph/error.hpp"

namespace ksgraph::dense {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Eigen::MatrixXd lift(const Eigen::MatrixXd& x, Index before, Index after) {
  return kron(kron(Eigen::MatrixXd::Identity(before, before), x),
              Eigen::MatrixXd::Identity(after, after));
}

Eigen::MatrixXd kronecker_sum(std::span<const Eigen::MatrixXd> factors) {
  if (factors.empty()) throw StructuralError("kronecker_sum needs at least one factor");
  Index total = 1;
  for (const auto& f : factors) {
    if (f.rows() != f.cols()) throw StructuralError("kronecker_sum factors must be square");
    total = checked_multiply(total, f.rows(), "a dense Kronecker sum");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total, total);
  Index before = 1;
  for (const auto& f : factors) {
    const Index after = total / (before * f.rows());
    out += lift(f, before, after);
    before *= f.rows();
  }
  return out;
}

Eigen::MatrixXd blockwise_trace(const Eigen::MatrixXd& m, Index before, Index after) {
  const Index n = m.rows();
  if (m.cols() != n || before < 1 || after < 1 || n % (before * after) != 0) {
    throw StructuralError("blockwise_trace: incompatible dimensions");
  }
  const Index d = n / (before * after);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (Index x = 0; x < before; ++x) {
    for (Index y = 0; y < after; ++y) {
      for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
          out(i, j) += m((x * d + i) * after + y, (x * d + j) * after + y);
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& m, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = rel_tol * ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > cutoff) inv(i) = 1.0 / ev(i);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace ksgraph::dense
