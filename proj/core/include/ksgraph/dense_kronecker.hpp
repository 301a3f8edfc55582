#pragma once

#include <span>

#include <Eigen/Dense>

#include "ksgraph/dataset.hpp"

// Small dense helpers for Kronecker algebra. These materialize full
// matrices and are meant for desk-scale validation and the dense oracle.
namespace ksgraph::dense {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// I_before (x) x (x) I_after
Eigen::MatrixXd lift(const Eigen::MatrixXd& x, Index before, Index after);

// Sum over factors of I (x) factor (x) I, first factor at the largest stride.
Eigen::MatrixXd kronecker_sum(std::span<const Eigen::MatrixXd> factors);

// Stridewise-blockwise trace: for M of size (before*d*after)^2 returns the
// d x d matrix with entries sum_{x,y} M[(x,i,y),(x,j,y)].
Eigen::MatrixXd blockwise_trace(const Eigen::MatrixXd& m, Index before, Index after);

// Moore-Penrose pseudo-inverse of a symmetric matrix via its eigenbasis;
// eigenvalues with magnitude below rel_tol * max magnitude are treated as 0.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& m, double rel_tol = 1e-12);

}  // namespace ksgraph::dense
