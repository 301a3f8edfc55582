#include "ksgraph/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "ksgraph/error.hpp"

namespace ksgraph {

Index checked_multiply(Index a, Index b, std::string_view what) {
  Index out = 0;
  if (a < 0 || b < 0 || __builtin_mul_overflow(a, b, &out)) {
    throw CapacityError("size overflow while computing " + std::string(what));
  }
  return out;
}

Index checked_add(Index a, Index b, std::string_view what) {
  Index out = 0;
  if (a < 0 || b < 0 || __builtin_add_overflow(a, b, &out)) {
    throw CapacityError("size overflow while computing " + std::string(what));
  }
  return out;
}

namespace {

// Total number of cells, or -1 if it does not fit in Index.
Index cell_count(const std::vector<Index>& shape) {
  Index total = 1;
  for (Index d : shape) {
    if (__builtin_mul_overflow(total, d, &total)) return -1;
  }
  return total;
}

}  // namespace

SparseTensor::SparseTensor(std::vector<Index> shape, std::vector<Index> coordinates,
                           std::vector<double> values)
    : shape_(std::move(shape)) {
  const std::size_t order = shape_.size();
  if (order == 0) throw StructuralError("tensor must have at least one axis");
  for (Index d : shape_) {
    if (d < 1) throw StructuralError("tensor axis lengths must be positive");
  }
  if (coordinates.size() != values.size() * order) {
    throw StructuralError("coordinate array does not match value count");
  }
  const std::size_t n = values.size();
  for (std::size_t e = 0; e < n; ++e) {
    if (!std::isfinite(values[e])) {
      throw DomainError("tensor entry " + std::to_string(e) + " is not finite");
    }
    for (std::size_t a = 0; a < order; ++a) {
      const Index c = coordinates[e * order + a];
      if (c < 0 || c >= shape_[a]) {
        throw StructuralError("tensor entry " + std::to_string(e) + " index " +
                              std::to_string(c) + " out of bounds on axis " +
                              std::to_string(a) + " (length " +
                              std::to_string(shape_[a]) + ")");
      }
    }
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const Index cells = cell_count(shape_);
  if (cells >= 0) {
    std::vector<Index> key(n);
    for (std::size_t e = 0; e < n; ++e) {
      Index k = 0;
      for (std::size_t a = 0; a < order; ++a) k = k * shape_[a] + coordinates[e * order + a];
      key[e] = k;
    }
    if (!std::is_sorted(key.begin(), key.end())) {
      std::stable_sort(perm.begin(), perm.end(),
                       [&](std::size_t x, std::size_t y) { return key[x] < key[y]; });
    }
  } else {
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) {
      return std::lexicographical_compare(
          coordinates.begin() + static_cast<std::ptrdiff_t>(x * order),
          coordinates.begin() + static_cast<std::ptrdiff_t>((x + 1) * order),
          coordinates.begin() + static_cast<std::ptrdiff_t>(y * order),
          coordinates.begin() + static_cast<std::ptrdiff_t>((y + 1) * order));
    });
  }

  coordinates_.reserve(coordinates.size());
  values_.reserve(n);
  auto same = [&](std::size_t x, std::size_t y) {
    return std::equal(coordinates.begin() + static_cast<std::ptrdiff_t>(x * order),
                      coordinates.begin() + static_cast<std::ptrdiff_t>((x + 1) * order),
                      coordinates.begin() + static_cast<std::ptrdiff_t>(y * order));
  };
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < n && same(perm[i], perm[j])) {
      sum += values[perm[j]];
      ++j;
    }
    if (sum != 0.0) {
      const auto first = coordinates.begin() + static_cast<std::ptrdiff_t>(perm[i] * order);
      coordinates_.insert(coordinates_.end(), first, first + static_cast<std::ptrdiff_t>(order));
      values_.push_back(sum);
    }
    i = j;
  }
  coordinates_.shrink_to_fit();
  values_.shrink_to_fit();
}

SparseTensor SparseTensor::from_dense(std::vector<Index> shape, std::span<const double> values) {
  const Index cells = cell_count(shape);
  if (cells < 0 || static_cast<std::size_t>(cells) != values.size()) {
    throw StructuralError("dense buffer size does not match tensor shape");
  }
  const std::size_t order = shape.size();
  std::vector<Index> coords;
  std::vector<double> vals;
  std::vector<Index> idx(order, 0);
  for (Index flat = 0; flat < cells; ++flat) {
    const double v = values[static_cast<std::size_t>(flat)];
    if (v != 0.0) {
      coords.insert(coords.end(), idx.begin(), idx.end());
      vals.push_back(v);
    }
    for (std::size_t a = order; a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  return SparseTensor(std::move(shape), std::move(coords), std::move(vals));
}

double SparseTensor::squared_frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

std::vector<double> SparseTensor::to_dense(Index max_entries) const {
  const Index cells = cell_count(shape_);
  if (cells < 0 || cells > max_entries) {
    throw CapacityError("tensor too large to densify");
  }
  std::vector<double> out(static_cast<std::size_t>(cells), 0.0);
  const std::size_t order = shape_.size();
  for (Index e = 0; e < nnz(); ++e) {
    Index k = 0;
    for (std::size_t a = 0; a < order; ++a) {
      k = k * shape_[a] + coordinates_[static_cast<std::size_t>(e) * order + a];
    }
    out[static_cast<std::size_t>(k)] = values_[static_cast<std::size_t>(e)];
  }
  return out;
}

Modality::Modality(std::string name, std::vector<std::string> axes, SparseTensor values)
    : name_(std::move(name)), axes_(std::move(axes)), tensor_(std::move(values)) {
  if (axes_.size() != tensor_.order()) {
    throw StructuralError("modality '" + name_ + "' lists " + std::to_string(axes_.size()) +
                          " axes but its tensor has order " +
                          std::to_string(tensor_.order()));
  }
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (axes_[a].empty()) throw StructuralError("modality '" + name_ + "' has an unnamed axis");
    for (std::size_t b = 0; b < a; ++b) {
      if (axes_[a] == axes_[b]) {
        throw StructuralError("modality '" + name_ + "' repeats axis '" + axes_[a] + "'");
      }
    }
  }
}

std::ptrdiff_t Modality::position(std::string_view axis) const {
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    if (axes_[a] == axis) return static_cast<std::ptrdiff_t>(a);
  }
  return -1;
}

Dataset::Dataset(std::vector<Modality> modalities) : modalities_(std::move(modalities)) {
  std::unordered_map<std::string, std::size_t> owner;
  std::unordered_set<std::string_view> names;
  for (std::size_t g = 0; g < modalities_.size(); ++g) {
    const Modality& m = modalities_[g];
    if (!names.insert(m.name()).second) {
      throw StructuralError("duplicate modality name '" + m.name() + "'");
    }
    for (std::size_t a = 0; a < m.axes().size(); ++a) {
      const std::string& axis = m.axes()[a];
      const Index length = m.tensor().shape()[a];
      auto it = owner.find(axis);
      if (it == owner.end()) {
        owner.emplace(axis, g);
        axes_.push_back(Axis{axis, length});
        continue;
      }
      const Axis& known = axes_[axis_index(axis)];
      if (known.length != length) {
        throw StructuralError("axis '" + axis + "' has length " + std::to_string(known.length) +
                              " in modality '" + modalities_[it->second].name() +
                              "' but length " + std::to_string(length) + " in modality '" +
                              m.name() + "'");
      }
    }
  }
}

std::size_t Dataset::axis_index(std::string_view name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].name == name) return i;
  }
  throw StructuralError("unknown axis '" + std::string(name) + "'");
}

std::ptrdiff_t ModalityLayout::position(std::size_t axis) const {
  for (std::size_t p = 0; p < axes.size(); ++p) {
    if (axes[p] == axis) return static_cast<std::ptrdiff_t>(p);
  }
  return -1;
}

namespace {

ModalityStructure tabulate(std::vector<std::string> axis_names, std::vector<Index> lengths,
                           const std::vector<std::vector<std::size_t>>& modality_axes,
                           std::vector<std::string> modality_names) {
  ModalityStructure s;
  s.axis_name = std::move(axis_names);
  s.axis_length = std::move(lengths);
  const std::size_t L = s.axis_length.size();
  s.total_given.assign(L, 0);
  s.samples.assign(L, 0);
  s.memberships.assign(L, {});
  for (std::size_t g = 0; g < modality_axes.size(); ++g) {
    ModalityLayout layout;
    layout.name = std::move(modality_names[g]);
    layout.axes = modality_axes[g];
    const std::string context = "the size of modality '" + layout.name + "'";
    const std::size_t order = layout.axes.size();
    if (order == 0) throw StructuralError("modality '" + layout.name + "' has no axes");
    layout.before.assign(order, 1);
    layout.after.assign(order, 1);
    layout.without.assign(order, 1);
    for (std::size_t p = 0; p < order; ++p) {
      if (layout.axes[p] >= L) throw StructuralError("modality references an unknown axis");
      for (std::size_t q = 0; q < p; ++q) {
        if (layout.axes[q] == layout.axes[p]) {
          throw StructuralError("modality '" + layout.name + "' repeats an axis");
        }
      }
      layout.total = checked_multiply(layout.total, s.axis_length[layout.axes[p]], context);
    }
    for (std::size_t p = 1; p < order; ++p) {
      layout.before[p] = layout.before[p - 1] * s.axis_length[layout.axes[p - 1]];
    }
    for (std::size_t p = order - 1; p-- > 0;) {
      layout.after[p] = layout.after[p + 1] * s.axis_length[layout.axes[p + 1]];
    }
    for (std::size_t p = 0; p < order; ++p) {
      layout.without[p] = layout.before[p] * layout.after[p];
      const std::size_t l = layout.axes[p];
      s.total_given[l] = checked_add(s.total_given[l], layout.total, context);
      s.samples[l] = checked_add(s.samples[l], layout.without[p], context);
      s.memberships[l].push_back(Membership{g, p});
    }
    s.modalities.push_back(std::move(layout));
  }
  return s;
}

}  // namespace

ModalityStructure build_structure(const Dataset& dataset) {
  std::vector<std::string> names;
  std::vector<Index> lengths;
  for (const Axis& a : dataset.axes()) {
    names.push_back(a.name);
    lengths.push_back(a.length);
  }
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::string> modality_names;
  for (const Modality& m : dataset.modalities()) {
    std::vector<std::size_t> ids;
    for (const std::string& axis : m.axes()) ids.push_back(dataset.axis_index(axis));
    members.push_back(std::move(ids));
    modality_names.push_back(m.name());
  }
  return tabulate(std::move(names), std::move(lengths), members, std::move(modality_names));
}

ModalityStructure build_structure(std::vector<Index> axis_lengths,
                                  const std::vector<std::vector<std::size_t>>& modality_axes) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < axis_lengths.size(); ++i) {
    if (axis_lengths[i] < 1) throw StructuralError("axis lengths must be positive");
    names.push_back("axis" + std::to_string(i));
  }
  std::vector<std::string> modality_names;
  for (std::size_t g = 0; g < modality_axes.size(); ++g) {
    modality_names.push_back("modality" + std::to_string(g));
  }
  return tabulate(std::move(names), std::move(axis_lengths), modality_axes,
                  std::move(modality_names));
}

namespace {

// Appends the unfolding of `tensor` along position `p` into CSR arrays whose
// columns start at `column_offset`. Row pointers must already be sized.
struct CsrBuilder {
  Index rows;
  std::vector<Index> row_start;  // rows + 1
  std::vector<Index> cursor;
  std::vector<Index> columns;
  std::vector<double> values;
};

void count_rows(const SparseTensor& t, std::size_t p, std::vector<Index>& counts) {
  const std::size_t order = t.order();
  const auto& coords = t.coordinates();
  for (Index e = 0; e < t.nnz(); ++e) {
    ++counts[static_cast<std::size_t>(coords[static_cast<std::size_t>(e) * order + p])];
  }
}

void scatter(const SparseTensor& t, std::size_t p, Index column_offset, CsrBuilder& b) {
  const std::size_t order = t.order();
  const auto& shape = t.shape();
  std::vector<Index> stride(order, 0);
  Index s = 1;
  for (std::size_t a = order; a-- > 0;) {
    if (a == p) continue;
    stride[a] = s;
    s *= shape[a];
  }
  const auto& coords = t.coordinates();
  for (Index e = 0; e < t.nnz(); ++e) {
    const Index* c = coords.data() + e * static_cast<Index>(order);
    Index col = column_offset;
    for (std::size_t a = 0; a < order; ++a) {
      if (a != p) col += c[a] * stride[a];
    }
    const Index slot = b.cursor[static_cast<std::size_t>(c[p])]++;
    b.columns[static_cast<std::size_t>(slot)] = col;
    b.values[static_cast<std::size_t>(slot)] = t.value(e);
  }
}

SparseRowMatrix finish(CsrBuilder& b, Index cols) {
  // Entries of one tensor arrive in increasing column order only when the
  // unfolded axis comes first, so rows are sorted explicitly.
  std::vector<std::pair<Index, double>> scratch;
  for (Index r = 0; r < b.rows; ++r) {
    const auto lo = static_cast<std::size_t>(b.row_start[static_cast<std::size_t>(r)]);
    const auto hi = static_cast<std::size_t>(b.row_start[static_cast<std::size_t>(r) + 1]);
    if (std::is_sorted(b.columns.begin() + static_cast<std::ptrdiff_t>(lo),
                       b.columns.begin() + static_cast<std::ptrdiff_t>(hi))) {
      continue;
    }
    scratch.clear();
    for (std::size_t k = lo; k < hi; ++k) scratch.emplace_back(b.columns[k], b.values[k]);
    std::sort(scratch.begin(), scratch.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t k = lo; k < hi; ++k) {
      b.columns[k] = scratch[k - lo].first;
      b.values[k] = scratch[k - lo].second;
    }
  }
  const Index nnz = b.row_start.back();
  SparseRowMatrix m(b.rows, cols);
  m.resizeNonZeros(nnz);
  std::copy(b.row_start.begin(), b.row_start.end(), m.outerIndexPtr());
  std::copy(b.columns.begin(), b.columns.end(), m.innerIndexPtr());
  std::copy(b.values.begin(), b.values.end(), m.valuePtr());
  return m;
}

CsrBuilder prepare(Index rows, const std::vector<Index>& counts) {
  CsrBuilder b;
  b.rows = rows;
  b.row_start.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (Index r = 0; r < rows; ++r) {
    b.row_start[static_cast<std::size_t>(r) + 1] =
        b.row_start[static_cast<std::size_t>(r)] + counts[static_cast<std::size_t>(r)];
  }
  b.cursor.assign(b.row_start.begin(), b.row_start.end() - 1);
  b.columns.resize(static_cast<std::size_t>(b.row_start.back()));
  b.values.resize(static_cast<std::size_t>(b.row_start.back()));
  return b;
}

Index other_cells(const SparseTensor& t, std::size_t p, const std::string& name) {
  Index cols = 1;
  for (std::size_t a = 0; a < t.order(); ++a) {
    if (a != p) cols = checked_multiply(cols, t.shape()[a], "the size of modality '" + name + "'");
  }
  return cols;
}

}  // namespace

SparseRowMatrix matricize(const Modality& modality, std::string_view axis) {
  const std::ptrdiff_t pos = modality.position(axis);
  if (pos < 0) {
    throw StructuralError("axis '" + std::string(axis) + "' is not part of modality '" +
                          modality.name() + "'");
  }
  const auto p = static_cast<std::size_t>(pos);
  const SparseTensor& t = modality.tensor();
  const Index rows = t.shape()[p];
  const Index cols = other_cells(t, p, modality.name());
  std::vector<Index> counts(static_cast<std::size_t>(rows), 0);
  count_rows(t, p, counts);
  CsrBuilder b = prepare(rows, counts);
  scatter(t, p, 0, b);
  return finish(b, cols);
}

SparseRowMatrix concatenated_matricization(const Dataset& dataset, std::size_t axis) {
  if (axis >= dataset.axes().size()) throw StructuralError("axis index out of range");
  const Axis& a = dataset.axes()[axis];
  std::vector<Index> counts(static_cast<std::size_t>(a.length), 0);
  Index cols = 0;
  for (const Modality& m : dataset.modalities()) {
    const std::ptrdiff_t pos = m.position(a.name);
    if (pos < 0) continue;
    count_rows(m.tensor(), static_cast<std::size_t>(pos), counts);
    cols = checked_add(cols, other_cells(m.tensor(), static_cast<std::size_t>(pos), m.name()),
                       "the sample count of axis '" + a.name + "'");
  }
  if (cols == 0) throw StructuralError("axis '" + a.name + "' appears in no modality");
  CsrBuilder b = prepare(a.length, counts);
  Index offset = 0;
  for (const Modality& m : dataset.modalities()) {
    const std::ptrdiff_t pos = m.position(a.name);
    if (pos < 0) continue;
    scatter(m.tensor(), static_cast<std::size_t>(pos), offset, b);
    offset += other_cells(m.tensor(), static_cast<std::size_t>(pos), m.name());
  }
  return finish(b, cols);
}

double gram_trace(const Dataset& dataset, std::size_t axis) {
  const std::string& name = dataset.axes().at(axis).name;
  double s = 0.0;
  for (const Modality& m : dataset.modalities()) {
    if (m.position(name) >= 0) s += m.tensor().squared_frobenius_norm();
  }
  return s;
}

}  // namespace ksgraph
