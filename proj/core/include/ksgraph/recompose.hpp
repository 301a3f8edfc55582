#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ksgraph/dataset.hpp"

namespace ksgraph {

struct Edge {
  Index i = 0;  // 0-based, i < j
  Index j = 0;
  double weight = 0.0;
};

struct EdgeStatistics {
  double z = 0.0;
  double p_raw = 1.0;
  double p_bonferroni = 1.0;
};

struct FactorGraph {
  Axis axis;
  std::vector<Edge> edges;                // sorted by (i, j)
  std::vector<Index> degree;              // per vertex, over retained edges
  std::vector<EdgeStatistics> statistics;  // empty, or one entry per edge
};

namespace rule {

struct TopOverall {
  Index n = 0;
};
struct TopPerVertex {
  Index n = 0;
};
// Ranks edges by |psi_ij| / sqrt(w_i w_j), w being off-diagonal row masses.
struct DegreeDownweighted {
  Index n = 0;
};
// Keeps edges with |psi_ij| strictly above a magnitude, normally obtained
// from significance_rule() in stat_test.hpp.
struct Magnitude {
  double threshold = 0.0;
  double alpha = 0.05;
};

}  // namespace rule

using RuleVariant =
    std::variant<rule::TopOverall, rule::TopPerVertex, rule::DegreeDownweighted, rule::Magnitude>;

struct ThresholdRule {
  RuleVariant variant = rule::TopOverall{};
  Index min_edges_per_vertex = 0;
};

struct RecomposeOptions {
  // Rows per recomposition block; 0 picks a size keeping blocks near 32 MB.
  Index block_rows = 0;
};

// Block size used when RecomposeOptions::block_rows is 0.
Index default_block_rows(Index d);

// Recomposes V diag(lambda) V^T block by block over the upper triangle and
// applies `rule` on the fly. Zero weights are never retained; ties at the
// retention boundary prefer the lexicographically smaller (i, j).
FactorGraph recompose_threshold(const Axis& axis, const Eigen::MatrixXd& eigenvectors,
                                const Eigen::VectorXd& lambda, const ThresholdRule& rule,
                                const RecomposeOptions& options = {});

// Streams every upper-triangle entry (i < j, psi_ij) of V diag(lambda) V^T to
// `visit`, one row block at a time, without storing the full matrix.
template <typename Visitor>
void for_each_off_diagonal(const Eigen::MatrixXd& v, const Eigen::VectorXd& lambda,
                           Visitor&& visit, Index block_rows = 0);

}  // namespace ksgraph

#include "ksgraph/detail/recompose_impl.hpp"
