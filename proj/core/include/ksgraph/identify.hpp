#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "ksgraph/dataset.hpp"
#include "ksgraph/eigensolver.hpp"

namespace ksgraph {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Linear relations between modality traces. Row g of m_matrix maps per-axis
// factor traces to the trace of modality g's precision; the basis is the
// first maximal independent set of rows in modality order.
struct TraceStructure {
  std::vector<std::vector<BigInt>> m_matrix;          // modalities x axes
  std::vector<std::size_t> basis_modalities;          // modality index of each basis row
  std::vector<std::vector<BigInt>> basis;             // rank x axes
  std::vector<std::vector<Rational>> coefficients;    // modalities x rank, row = sum a_i basis_i
  // Same relation expressed between identity shifts (trace / total size):
  // shift_g = sum_i shift_coefficients[g][i] * shift_{basis_i}.
  std::vector<std::vector<Rational>> shift_coefficients;
  std::size_t rank = 0;

  // Floating-point copies for numerical use.
  Eigen::MatrixXd coefficient_matrix() const;        // modalities x rank
  Eigen::MatrixXd shift_coefficient_matrix() const;  // modalities x rank
};

TraceStructure build_trace_structure(const ModalityStructure& structure);

struct TraceParameters {
  std::vector<double> axis_shift;      // tau_l = tr(Psi_l) / d_l
  std::vector<double> modality_trace;  // tr of each modality's Kronecker sum
  std::vector<double> modality_shift;  // modality_trace / total size = sum of axis shifts
  std::vector<double> t;               // modality_trace of each basis modality
};

struct IdentifiableFactors {
  std::vector<Eigen::MatrixXd> factors;  // trace-zero factors
  TraceParameters parameters;
};

// Dense factors, one per axis of the structure.
IdentifiableFactors to_identifiable(const std::vector<Eigen::MatrixXd>& factors,
                                    const ModalityStructure& structure,
                                    const TraceStructure& trace);

// Spectral factors V diag(lambda) V^T: only the traces are needed, so only
// per-axis eigenvalue vectors are used. Off-diagonal entries are unchanged
// by the projection.
TraceParameters trace_parameters(const AxisVectors& lambdas, const ModalityStructure& structure,
                                 const TraceStructure& trace);

}  // namespace ksgraph
