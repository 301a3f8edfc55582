#pragma once

#include <Eigen/Dense>

#include "ksgraph/dataset.hpp"

namespace ksgraph {

// A rows x cols real matrix available only through block products.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;

  // Returns A * x for x with cols() rows.
  virtual Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const = 0;
  // Returns A^T * y for y with rows() rows.
  virtual Eigen::MatrixXd multiply_transpose(const Eigen::MatrixXd& y) const = 0;

  // Squared Frobenius norm of A, i.e. the trace of A A^T.
  virtual double squared_frobenius_norm() const = 0;
};

class SparseOperator final : public LinearOperator {
 public:
  explicit SparseOperator(SparseRowMatrix matrix);

  Index rows() const override { return matrix_.rows(); }
  Index cols() const override { return matrix_.cols(); }
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const override;
  Eigen::MatrixXd multiply_transpose(const Eigen::MatrixXd& y) const override;
  double squared_frobenius_norm() const override { return squared_norm_; }

  const SparseRowMatrix& matrix() const noexcept { return matrix_; }

 private:
  SparseRowMatrix matrix_;
  double squared_norm_;
};

// Block products with a row-major sparse matrix, parallel over rows.
Eigen::MatrixXd sparse_product(const SparseRowMatrix& a, const Eigen::MatrixXd& x);
// A^T * y without forming the transpose; per-thread accumulators are used
// when more than one thread is available.
Eigen::MatrixXd sparse_transpose_product(const SparseRowMatrix& a, const Eigen::MatrixXd& y);

}  // namespace ksgraph
