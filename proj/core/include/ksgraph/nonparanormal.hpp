#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ksgraph/dataset.hpp"
#include "ksgraph/linear_operator.hpp"

namespace ksgraph {

enum class TieMethod { average, minimum };

struct RowTransform {
  std::vector<double> mapped;  // one value per entry of the input span
  double zero_value = 0.0;     // value every zero of the row maps to
};

// Ranks the row made of `values` plus `implicit_zeros` zeros and maps rank r
// to Phi^{-1}(r / (n + 1)), n being the full row length.
RowTransform rank_transform_row(std::span<const double> values, Index implicit_zeros,
                                TieMethod ties);

// The dense matrix core + z 1^T, kept as a sparse core with the sparsity
// pattern of the input plus one value per row.
class ShiftedSparse final : public LinearOperator {
 public:
  ShiftedSparse(SparseRowMatrix core, Eigen::VectorXd zero_map);

  Index rows() const override { return core_.rows(); }
  Index cols() const override { return core_.cols(); }
  Index width() const { return core_.cols(); }
  const SparseRowMatrix& core() const noexcept { return core_; }
  const Eigen::VectorXd& zero_map() const noexcept { return zero_map_; }

  Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const override;
  Eigen::MatrixXd multiply_transpose(const Eigen::MatrixXd& y) const override;
  double squared_frobenius_norm() const override { return squared_norm_; }

  // core * v + z * sum(v)
  Eigen::VectorXd matvec(const Eigen::VectorXd& v) const;
  // core^T * v + (z^T v) * 1
  Eigen::VectorXd rmatvec(const Eigen::VectorXd& v) const;

  Eigen::MatrixXd to_dense(Index max_entries = Index{1} << 26) const;

 private:
  SparseRowMatrix core_;
  Eigen::VectorXd zero_map_;
  double squared_norm_ = 0.0;
};

// Row-wise rank transform of an explicit sparse matrix.
ShiftedSparse nonparanormal_transform(SparseRowMatrix matrix, TieMethod ties);

// Row-wise rank transform of the concatenated matricization of `axis`.
ShiftedSparse nonparanormal_matricization(const Dataset& dataset, std::string_view axis,
                                          TieMethod ties = TieMethod::average);

}  // namespace ksgraph
