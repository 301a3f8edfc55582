#include "ksgraph/identify.hpp"

#include "ksgraph/error.hpp"

namespace ksgraph {

namespace {

struct EchelonRow {
  std::vector<Rational> row;
  std::size_t pivot;
  std::vector<Rational> combination;  // in terms of basis rows
};

Eigen::MatrixXd to_double(const std::vector<std::vector<Rational>>& m, std::size_t cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < m.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          m[r][c].convert_to<double>();
    }
  }
  return out;
}

TraceParameters parameters_from_traces(const std::vector<double>& axis_trace,
                                       const ModalityStructure& s, const TraceStructure& trace) {
  TraceParameters p;
  const std::size_t L = s.axis_count();
  p.axis_shift.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    p.axis_shift[l] = axis_trace[l] / static_cast<double>(s.axis_length[l]);
  }
  for (const ModalityLayout& m : s.modalities) {
    double tr = 0.0;
    double shift = 0.0;
    for (std::size_t q = 0; q < m.order(); ++q) {
      tr += static_cast<double>(m.without[q]) * axis_trace[m.axes[q]];
      shift += p.axis_shift[m.axes[q]];
    }
    p.modality_trace.push_back(tr);
    p.modality_shift.push_back(shift);
  }
  for (std::size_t g : trace.basis_modalities) p.t.push_back(p.modality_trace[g]);
  return p;
}

}  // namespace

Eigen::MatrixXd TraceStructure::coefficient_matrix() const {
  return to_double(coefficients, rank);
}

Eigen::MatrixXd TraceStructure::shift_coefficient_matrix() const {
  return to_double(shift_coefficients, rank);
}

TraceStructure build_trace_structure(const ModalityStructure& structure) {
  const std::size_t L = structure.axis_count();
  const std::size_t G = structure.modality_count();
  if (G == 0) throw StructuralError("trace structure needs at least one modality");

  TraceStructure out;
  out.m_matrix.assign(G, std::vector<BigInt>(L, 0));
  std::vector<BigInt> totals(G, 1);
  for (std::size_t g = 0; g < G; ++g) {
    const ModalityLayout& m = structure.modalities[g];
    for (std::size_t q = 0; q < m.order(); ++q) {
      BigInt without = 1;
      for (std::size_t o = 0; o < m.order(); ++o) {
        if (o != q) without *= BigInt(structure.axis_length[m.axes[o]]);
      }
      out.m_matrix[g][m.axes[q]] = without;
      totals[g] *= BigInt(structure.axis_length[m.axes[q]]);
    }
  }

  std::vector<EchelonRow> echelon;
  std::vector<std::vector<Rational>> raw(G);
  for (std::size_t g = 0; g < G; ++g) {
    std::vector<Rational> v(L);
    for (std::size_t l = 0; l < L; ++l) v[l] = Rational(out.m_matrix[g][l]);
    std::vector<Rational> combo(echelon.size(), Rational(0));
    for (const EchelonRow& e : echelon) {
      if (v[e.pivot] == 0) continue;
      const Rational f = v[e.pivot] / e.row[e.pivot];
      for (std::size_t l = 0; l < L; ++l) v[l] -= f * e.row[l];
      for (std::size_t i = 0; i < e.combination.size(); ++i) combo[i] += f * e.combination[i];
    }
    std::size_t pivot = L;
    for (std::size_t l = 0; l < L; ++l) {
      if (v[l] != 0) {
        pivot = l;
        break;
      }
    }
    if (pivot == L) {
      raw[g] = std::move(combo);
      continue;
    }
    const std::size_t index = out.basis_modalities.size();
    out.basis_modalities.push_back(g);
    out.basis.push_back(out.m_matrix[g]);
    // v = M_g - sum combo_i B_i, and M_g itself is basis row `index`.
    std::vector<Rational> combination(index + 1, Rational(0));
    for (std::size_t i = 0; i < index; ++i) combination[i] = -combo[i];
    combination[index] = 1;
    echelon.push_back(EchelonRow{std::move(v), pivot, std::move(combination)});
    for (EchelonRow& e : echelon) e.combination.resize(index + 1, Rational(0));
    raw[g].assign(index + 1, Rational(0));
    raw[g][index] = 1;
  }
  out.rank = out.basis_modalities.size();

  out.coefficients.assign(G, std::vector<Rational>(out.rank, Rational(0)));
  out.shift_coefficients.assign(G, std::vector<Rational>(out.rank, Rational(0)));
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t i = 0; i < raw[g].size(); ++i) out.coefficients[g][i] = raw[g][i];
    for (std::size_t l = 0; l < L; ++l) {
      Rational check = 0;
      for (std::size_t i = 0; i < out.rank; ++i) {
        check += out.coefficients[g][i] * Rational(out.basis[i][l]);
      }
      if (check != Rational(out.m_matrix[g][l])) {
        throw NumericalError("internal error: trace coefficients do not reproduce the matrix");
      }
    }
    for (std::size_t i = 0; i < out.rank; ++i) {
      out.shift_coefficients[g][i] =
          out.coefficients[g][i] * Rational(totals[out.basis_modalities[i]]) / Rational(totals[g]);
    }
  }
  return out;
}

IdentifiableFactors to_identifiable(const std::vector<Eigen::MatrixXd>& factors,
                                    const ModalityStructure& structure,
                                    const TraceStructure& trace) {
  const std::size_t L = structure.axis_count();
  if (factors.size() != L) throw StructuralError("need one factor per axis");
  std::vector<double> axis_trace(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (factors[l].rows() != structure.axis_length[l] || factors[l].cols() != factors[l].rows()) {
      throw StructuralError("factor " + std::to_string(l) + " has the wrong shape");
    }
    axis_trace[l] = factors[l].trace();
  }
  IdentifiableFactors out;
  out.parameters = parameters_from_traces(axis_trace, structure, trace);
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd f = factors[l];
    f.diagonal().array() -= out.parameters.axis_shift[l];
    out.factors.push_back(std::move(f));
  }
  return out;
}

TraceParameters trace_parameters(const AxisVectors& lambdas, const ModalityStructure& structure,
                                 const TraceStructure& trace) {
  if (lambdas.size() != structure.axis_count()) throw StructuralError("need one vector per axis");
  std::vector<double> axis_trace;
  for (const auto& v : lambdas) axis_trace.push_back(v.sum());
  return parameters_from_traces(axis_trace, structure, trace);
}

}  // namespace ksgraph
