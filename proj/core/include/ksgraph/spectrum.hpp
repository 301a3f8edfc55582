#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ksgraph/dataset.hpp"
#include "ksgraph/linear_operator.hpp"

namespace ksgraph {

struct SpectrumOptions {
  // Lanczos basis size; 0 picks max(2k + 1, k + 20), capped at d.
  Index krylov_dimension = 0;
  int max_restarts = 3000;
  // Every kept pair must satisfy ||S v - e v|| <= residual_tolerance * e_1.
  double residual_tolerance = 1e-6;
  // Gram eigenvalues below rank_cutoff * e_1 count as zero.
  double rank_cutoff = 1e-12;
  // Axes up to this length use a dense eigendecomposition of the Gram matrix,
  // assembled from block products.
  Index dense_limit = 512;
};

// Top-k eigenpairs of the Gram matrix S = A A^T of one axis.
struct AxisSpectrum {
  Axis axis;
  Index k = 0;
  Eigen::MatrixXd eigenvectors;      // d x k, orthonormal columns
  Eigen::VectorXd gram_eigenvalues;  // length k, nonincreasing, positive
  double explained_variance_ratio = 0.0;
  double gram_trace = 0.0;
  int iterations = 0;  // Lanczos restarts; 0 on the dense path
  double max_relative_residual = 0.0;
};

// Implicitly restarted Lanczos on S = A A^T, with the operator only touched
// through products, or a dense eigensolve for short axes. The start vector
// is drawn from `seed`. Eigenvector signs are fixed so the entry of largest
// magnitude is positive.
AxisSpectrum operator_spectrum(const LinearOperator& op, Axis axis, Index k, std::uint64_t seed,
                               const SpectrumOptions& options = {});

// Spectrum of the concatenated matricization of `axis` across modalities.
AxisSpectrum axis_spectrum(const Dataset& dataset, std::string_view axis, Index k,
                           std::uint64_t seed, const SpectrumOptions& options = {});

struct ScreeRow {
  Index component = 0;  // 1-based
  double eigenvalue = 0.0;
  double fraction = 0.0;
  double cumulative = 0.0;
};

// Per-component variance fractions relative to `full_trace`.
std::vector<ScreeRow> spectrum_report(const AxisSpectrum& spectrum, double full_trace);

// Smallest number of components whose cumulative fraction reaches `target`,
// or 0 when the table never reaches it.
Index components_for_variance(const std::vector<ScreeRow>& scree, double target);

// Keeps the leading `k` components of an existing spectrum.
AxisSpectrum truncate(const AxisSpectrum& spectrum, Index k);

}  // namespace ksgraph
