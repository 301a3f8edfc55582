#include "ksgraph/nonparanormal.hpp"

#include <algorithm>
#include <numeric>

#include "ksgraph/error.hpp"
#include "ksgraph/normal.hpp"

namespace ksgraph {

RowTransform rank_transform_row(std::span<const double> values, Index implicit_zeros,
                                TieMethod ties) {
  if (implicit_zeros < 0) throw DomainError("negative implicit zero count");
  const Index n = static_cast<Index>(values.size()) + implicit_zeros;
  if (n < 1) throw DomainError("rank_transform_row: empty row");
  const double denominator = static_cast<double>(n) + 1.0;

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  auto group_rank = [&](Index start, Index size) {
    // start is the 1-based position of the first member of the tie group.
    return ties == TieMethod::minimum ? static_cast<double>(start)
                                      : static_cast<double>(start) + 0.5 * static_cast<double>(size - 1);
  };

  RowTransform out;
  out.mapped.assign(values.size(), 0.0);
  Index zeros = implicit_zeros;
  for (double v : values) zeros += (v == 0.0);

  Index position = 1;
  bool zeros_placed = false;
  auto place_zeros = [&] {
    if (zeros > 0) out.zero_value = normal_quantile(group_rank(position, zeros) / denominator);
    position += zeros;
    zeros_placed = true;
  };
  std::size_t i = 0;
  while (i < order.size()) {
    const double v = values[order[i]];
    if (v == 0.0) {
      if (!zeros_placed) place_zeros();
      while (i < order.size() && values[order[i]] == 0.0) out.mapped[order[i++]] = out.zero_value;
      continue;
    }
    if (v > 0.0 && !zeros_placed) place_zeros();
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == v) ++j;
    const Index size = static_cast<Index>(j - i);
    const double mapped = normal_quantile(group_rank(position, size) / denominator);
    for (std::size_t t = i; t < j; ++t) out.mapped[order[t]] = mapped;
    position += size;
    i = j;
  }
  if (!zeros_placed && zeros > 0) place_zeros();
  return out;
}

ShiftedSparse::ShiftedSparse(SparseRowMatrix core, Eigen::VectorXd zero_map)
    : core_(std::move(core)), zero_map_(std::move(zero_map)) {
  if (zero_map_.size() != core_.rows()) {
    throw StructuralError("ShiftedSparse: zero map length does not match row count");
  }
  core_.makeCompressed();
  const Index* outer = core_.outerIndexPtr();
  const double* val = core_.valuePtr();
  const double width = static_cast<double>(core_.cols());
  for (Index r = 0; r < core_.rows(); ++r) {
    const double z = zero_map_(r);
    double row = 0.0;
    for (Index k = outer[r]; k < outer[r + 1]; ++k) {
      const double x = val[k] + z;
      row += x * x;
    }
    row += (width - static_cast<double>(outer[r + 1] - outer[r])) * z * z;
    squared_norm_ += row;
  }
}

Eigen::MatrixXd ShiftedSparse::multiply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = sparse_product(core_, x);
  out.noalias() += zero_map_ * x.colwise().sum();
  return out;
}

Eigen::MatrixXd ShiftedSparse::multiply_transpose(const Eigen::MatrixXd& y) const {
  Eigen::MatrixXd out = sparse_transpose_product(core_, y);
  const Eigen::RowVectorXd zy = zero_map_.transpose() * y;
  out.rowwise() += zy;
  return out;
}

Eigen::VectorXd ShiftedSparse::matvec(const Eigen::VectorXd& v) const {
  if (v.size() != cols()) throw StructuralError("ShiftedSparse::matvec: dimension mismatch");
  return multiply(v);
}

Eigen::VectorXd ShiftedSparse::rmatvec(const Eigen::VectorXd& v) const {
  if (v.size() != rows()) throw StructuralError("ShiftedSparse::rmatvec: dimension mismatch");
  return multiply_transpose(v);
}

Eigen::MatrixXd ShiftedSparse::to_dense(Index max_entries) const {
  if (rows() > 0 && cols() > max_entries / rows()) {
    throw CapacityError("ShiftedSparse too large to densify");
  }
  Eigen::MatrixXd out = zero_map_ * Eigen::RowVectorXd::Ones(cols());
  for (Index r = 0; r < core_.rows(); ++r) {
    for (SparseRowMatrix::InnerIterator it(core_, r); it; ++it) out(r, it.col()) += it.value();
  }
  return out;
}

ShiftedSparse nonparanormal_transform(SparseRowMatrix matrix, TieMethod ties) {
  SparseRowMatrix core = std::move(matrix);
  core.makeCompressed();
  Eigen::VectorXd zero_map(core.rows());
  const Index* outer = core.outerIndexPtr();
  double* val = core.valuePtr();
  const Index width = core.cols();
  const Index rows = core.rows();
#pragma omp parallel for schedule(dynamic, 64)
  for (Index r = 0; r < rows; ++r) {
    const Index lo = outer[r];
    const Index count = outer[r + 1] - lo;
    const RowTransform t = rank_transform_row(std::span<const double>(val + lo, static_cast<std::size_t>(count)),
                                              width - count, ties);
    zero_map(r) = t.zero_value;
    for (Index k = 0; k < count; ++k) val[lo + k] = t.mapped[static_cast<std::size_t>(k)] - t.zero_value;
  }
  return ShiftedSparse(std::move(core), std::move(zero_map));
}

ShiftedSparse nonparanormal_matricization(const Dataset& dataset, std::string_view axis,
                                          TieMethod ties) {
  return nonparanormal_transform(concatenated_matricization(dataset, dataset.axis_index(axis)), ties);
}

}  // namespace ksgraph
