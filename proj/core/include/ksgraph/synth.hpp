#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ksgraph/dataset.hpp"
#include "ksgraph/recompose.hpp"

namespace ksgraph {

struct GraphFactor {
  Eigen::SparseMatrix<double> factor;          // symmetric, d x d
  std::vector<std::pair<Index, Index>> edges;  // 0-based, i < j, sorted
};

struct BarabasiAlbertParams {
  Index d = 0;
  Index m = 1;
  double delta = 0.1;
  std::uint64_t seed = 0;
};

// Preferential attachment with weight (degree + 1). Off-diagonals of the
// factor are -1 on edges, the diagonal is degree + delta.
GraphFactor generate_ba_factor(const BarabasiAlbertParams& params);

struct GroundTruth {
  std::vector<std::string> axis_names;
  std::vector<GraphFactor> factors;
  std::vector<BarabasiAlbertParams> params;

  std::vector<Eigen::MatrixXd> dense_factors() const;
};

// One independent Barabasi-Albert graph per axis; axis seeds are derived
// from `seed`. Empty `axis_names` gives axis1, axis2, ...
GroundTruth generate_ground_truth(const std::vector<Index>& lengths,
                                  std::vector<std::string> axis_names, Index m, double delta,
                                  std::uint64_t seed);

// Draws `replicates` independent tensors from the Kronecker-sum normal with
// the given dense factors, one modality per replicate, all sharing the axes.
Dataset sample_ks_normal(const std::vector<Eigen::MatrixXd>& factors,
                         const std::vector<std::string>& axis_names, Index replicates,
                         std::uint64_t seed, const std::string& modality_prefix = "sample");

struct OracleOptions {
  Index max_total_size = 4096;
  double gradient_tolerance = 1e-9;
  int max_iterations = 200000;
};

struct OracleResult {
  std::vector<Eigen::MatrixXd> factors;  // trace-zero per axis
  std::vector<Eigen::MatrixXd> raw_factors;
  double nll = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

// Direct minimization of the matrix-form negative log-likelihood over dense
// symmetric factors. Only for small datasets.
OracleResult dense_oracle_mle(const Dataset& dataset, const ModalityStructure& structure,
                              const OracleOptions& options = {});

// Matrix-form negative log-likelihood of dense factors, shared with tests.
double dense_nll(const Dataset& dataset, const ModalityStructure& structure,
                 const std::vector<Eigen::MatrixXd>& factors);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // thresholds decreasing
  double auprc = 0.0;
};

// weighted: candidate pairs (i < j) with weights; pairs with zero weight are
// never predicted. truth: true pairs.
PrCurve pr_curve(const std::vector<Edge>& weighted,
                 const std::vector<std::pair<Index, Index>>& truth);

}  // namespace ksgraph
