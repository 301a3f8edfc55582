#include "ksgraph/linear_operator.hpp"

#include <omp.h>

#include "ksgraph/error.hpp"

namespace ksgraph {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Eigen::MatrixXd sparse_product(const SparseRowMatrix& a, const Eigen::MatrixXd& x) {
  if (x.rows() != a.cols()) throw StructuralError("sparse_product: dimension mismatch");
  const RowMatrix xr = x;
  RowMatrix out(a.rows(), x.cols());
  const Index* outer = a.outerIndexPtr();
  const Index* inner = a.innerIndexPtr();
  const double* val = a.valuePtr();
  const Index rows = a.rows();
#pragma omp parallel for schedule(static) if (a.nonZeros() > 100000)
  for (Index r = 0; r < rows; ++r) {
    auto row = out.row(r);
    row.setZero();
    for (Index k = outer[r]; k < outer[r + 1]; ++k) row.noalias() += val[k] * xr.row(inner[k]);
  }
  return out;
}

Eigen::MatrixXd sparse_transpose_product(const SparseRowMatrix& a, const Eigen::MatrixXd& y) {
  if (y.rows() != a.rows()) throw StructuralError("sparse_transpose_product: dimension mismatch");
  const RowMatrix yr = y;
  const Index* outer = a.outerIndexPtr();
  const Index* inner = a.innerIndexPtr();
  const double* val = a.valuePtr();
  const Index rows = a.rows();
  const int threads = a.nonZeros() > 100000 ? omp_get_max_threads() : 1;
  RowMatrix out = RowMatrix::Zero(a.cols(), y.cols());
  if (threads <= 1) {
    for (Index r = 0; r < rows; ++r) {
      const auto yrow = yr.row(r);
      for (Index k = outer[r]; k < outer[r + 1]; ++k) out.row(inner[k]).noalias() += val[k] * yrow;
    }
    return out;
  }
#pragma omp parallel num_threads(threads)
  {
    RowMatrix local = RowMatrix::Zero(a.cols(), y.cols());
#pragma omp for schedule(static)
    for (Index r = 0; r < rows; ++r) {
      const auto yrow = yr.row(r);
      for (Index k = outer[r]; k < outer[r + 1]; ++k) local.row(inner[k]).noalias() += val[k] * yrow;
    }
#pragma omp critical
    out += local;
  }
  return out;
}

SparseOperator::SparseOperator(SparseRowMatrix matrix) : matrix_(std::move(matrix)) {
  matrix_.makeCompressed();
  squared_norm_ = 0.0;
  const double* v = matrix_.valuePtr();
  for (Index k = 0; k < matrix_.nonZeros(); ++k) squared_norm_ += v[k] * v[k];
}

Eigen::MatrixXd SparseOperator::multiply(const Eigen::MatrixXd& x) const {
  return sparse_product(matrix_, x);
}

Eigen::MatrixXd SparseOperator::multiply_transpose(const Eigen::MatrixXd& y) const {
  return sparse_transpose_product(matrix_, y);
}

}  // namespace ksgraph
