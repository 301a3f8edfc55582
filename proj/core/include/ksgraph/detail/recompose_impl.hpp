#pragma once

#include <algorithm>

#include "ksgraph/error.hpp"

namespace ksgraph {

template <typename Visitor>
void for_each_off_diagonal(const Eigen::MatrixXd& v, const Eigen::VectorXd& lambda,
                           Visitor&& visit, Index block_rows) {
  if (v.cols() != lambda.size()) {
    throw StructuralError("eigenvector count does not match eigenvalue count");
  }
  const Index d = v.rows();
  const Index nb = block_rows > 0 ? block_rows : default_block_rows(d);
  const Eigen::MatrixXd weighted = v * lambda.asDiagonal();
  Eigen::MatrixXd block;
  for (Index r0 = 0; r0 < d; r0 += nb) {
    const Index rows = std::min(nb, d - r0);
    // Column a holds row r0 + a of the recomposed matrix from column r0 on.
    block.noalias() = v.middleRows(r0, d - r0) * weighted.middleRows(r0, rows).transpose();
    for (Index a = 0; a < rows; ++a) {
      const double* col = block.col(a).data();
      for (Index c = a + 1; c < d - r0; ++c) visit(r0 + a, r0 + c, col[c]);
    }
  }
}

}  // namespace ksgraph
