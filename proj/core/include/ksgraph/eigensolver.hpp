#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ksgraph/dataset.hpp"

namespace ksgraph {

// Per-axis vectors indexed like ModalityStructure axes.
using AxisVectors = std::vector<Eigen::VectorXd>;

// For the axes of one modality (in modality order) returns, for each index i
// of the target axis, the sum over all index combinations j of the other
// axes of 1 / (lambda_target[i] + sum_l lambda_l[j_l]).
Eigen::VectorXd ks_diag_sbtrace_inverse(std::span<const Eigen::VectorXd> lambdas,
                                        std::size_t target);

// Gradient of the eigenvalue-domain negative log-likelihood.
AxisVectors nll_gradient(const AxisVectors& gram_eigenvalues, const AxisVectors& lambdas,
                         const ModalityStructure& structure);

double nll_value(const AxisVectors& gram_eigenvalues, const AxisVectors& lambdas,
                 const ModalityStructure& structure);

enum class StepMetric {
  // Gradient scaled by the diagonal of the Hessian.
  diagonal,
  // Plain gradient steps.
  identity,
};

struct SolverOptions {
  // Per-axis floors; empty means 1e-10 * max_i(1 / E_i) for each axis.
  std::vector<double> epsilon;
  // Stopping threshold on the largest projected gradient entry; a
  // nonpositive value means 1e-8 * max |E|.
  double tolerance = 0.0;
  int max_iterations = 10000;
  StepMetric metric = StepMetric::diagonal;
};

struct EigenvalueSolution {
  AxisVectors lambda;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  double nll = 0.0;
  std::vector<double> epsilon;
  std::vector<bool> pinned;  // per axis: some eigenvalue sits on its floor
  std::vector<std::string> warnings;
};

// Minimizes the negative log-likelihood over per-axis precision eigenvalues
// given per-axis Gram eigenvalues. Only the axis lengths implied by
// `gram_eigenvalues` matter; the structure supplies modality membership.
EigenvalueSolution solve_eigenvalues(const AxisVectors& gram_eigenvalues,
                                     const ModalityStructure& structure,
                                     const SolverOptions& options = {});

}  // namespace ksgraph
