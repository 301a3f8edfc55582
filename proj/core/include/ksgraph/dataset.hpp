#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

namespace ksgraph {

using Index = std::int64_t;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

struct Axis {
  std::string name;
  Index length = 0;
};

// Multiplies two nonnegative sizes, throwing CapacityError on overflow.
// `what` names the quantity being computed for the error message.
Index checked_multiply(Index a, Index b, std::string_view what);
Index checked_add(Index a, Index b, std::string_view what);

// Coordinate-format tensor. Entries are stored sorted lexicographically by
// multi-index, without duplicates and without explicit zeros.
class SparseTensor {
 public:
  SparseTensor() = default;

  // `coordinates` holds nnz * order indices, entry-major (the multi-index of
  // entry e occupies coordinates[e*order, (e+1)*order)). Duplicates are
  // summed, zeros (including duplicates that cancel) are dropped.
  SparseTensor(std::vector<Index> shape, std::vector<Index> coordinates,
               std::vector<double> values);

  // Builds from a dense array in the row-major convention used throughout
  // the library (first axis has the largest stride).
  static SparseTensor from_dense(std::vector<Index> shape,
                                 std::span<const double> values);

  std::size_t order() const noexcept { return shape_.size(); }
  const std::vector<Index>& shape() const noexcept { return shape_; }
  Index nnz() const noexcept { return static_cast<Index>(values_.size()); }

  std::span<const Index> coordinate(Index entry) const {
    return {coordinates_.data() + entry * static_cast<Index>(order()), order()};
  }
  double value(Index entry) const { return values_[static_cast<std::size_t>(entry)]; }

  const std::vector<Index>& coordinates() const noexcept { return coordinates_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double squared_frobenius_norm() const;

  // Dense row-major copy; throws CapacityError above `max_entries`.
  std::vector<double> to_dense(Index max_entries = Index{1} << 26) const;

 private:
  std::vector<Index> shape_;
  std::vector<Index> coordinates_;
  std::vector<double> values_;
};

class Modality {
 public:
  // `axes` are axis names in tensor order; their lengths are taken from the
  // tensor shape.
  Modality(std::string name, std::vector<std::string> axes, SparseTensor values);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& axes() const noexcept { return axes_; }
  const SparseTensor& tensor() const noexcept { return tensor_; }

  // Position of `axis` in this modality's axis order, or -1 when absent.
  std::ptrdiff_t position(std::string_view axis) const;

 private:
  std::string name_;
  std::vector<std::string> axes_;
  SparseTensor tensor_;
};

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Modality> modalities);

  const std::vector<Axis>& axes() const noexcept { return axes_; }
  const std::vector<Modality>& modalities() const noexcept { return modalities_; }

  // Throws StructuralError for unknown names.
  std::size_t axis_index(std::string_view name) const;
  const Axis& axis(std::string_view name) const { return axes_[axis_index(name)]; }

 private:
  std::vector<Axis> axes_;
  std::vector<Modality> modalities_;
};

// Size bookkeeping for one modality; vectors are indexed by position in the
// modality's axis order.
struct ModalityLayout {
  std::string name;
  std::vector<std::size_t> axes;  // indices into ModalityStructure::axis_length
  std::vector<Index> before;      // product of lengths of earlier axes
  std::vector<Index> after;       // product of lengths of later axes
  std::vector<Index> without;     // product of all other lengths
  Index total = 1;

  std::size_t order() const noexcept { return axes.size(); }
  std::ptrdiff_t position(std::size_t axis) const;
};

struct Membership {
  std::size_t modality;
  std::size_t position;
};

struct ModalityStructure {
  std::vector<std::string> axis_name;
  std::vector<Index> axis_length;
  std::vector<ModalityLayout> modalities;
  std::vector<Index> total_given;   // sum of totals over modalities containing the axis
  std::vector<Index> samples;       // sum of "without" counts over those modalities
  std::vector<std::vector<Membership>> memberships;

  std::size_t axis_count() const noexcept { return axis_length.size(); }
  std::size_t modality_count() const noexcept { return modalities.size(); }
};

ModalityStructure build_structure(const Dataset& dataset);

// Builds the bookkeeping directly from lengths and memberships. Axis names
// default to "axis<i>" and modality names to "modality<g>".
ModalityStructure build_structure(std::vector<Index> axis_lengths,
                                  const std::vector<std::vector<std::size_t>>& modality_axes);

// Unfolds `modality` along `axis` into a d_axis x (product of other lengths)
// matrix. Column strides are row-major over the remaining axes in modality
// order.
SparseRowMatrix matricize(const Modality& modality, std::string_view axis);

// Horizontal concatenation of the matricizations of every modality that
// contains the axis, in modality order.
SparseRowMatrix concatenated_matricization(const Dataset& dataset, std::size_t axis);

// Sum of squared Frobenius norms of the modalities containing the axis;
// equals the trace of the axis Gram matrix.
double gram_trace(const Dataset& dataset, std::size_t axis);

}  // namespace ksgraph
