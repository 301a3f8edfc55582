#include "ksgraph/spectrum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <arpack/arpack.h>

#include "ksgraph/error.hpp"

namespace ksgraph {

namespace {

void fix_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0) v.col(c) *= -1.0;
  }
}

struct Eigenpairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // d x k
  int restarts = 0;
};

Eigen::MatrixXd gram_product(const LinearOperator& op, const Eigen::MatrixXd& x) {
  return op.multiply(op.multiply_transpose(x));
}

Eigenpairs dense_pairs(const LinearOperator& op, Index k) {
  const Index d = op.rows();
  constexpr Index block = 64;
  Eigen::MatrixXd gram(d, d);
  for (Index c = 0; c < d; c += block) {
    const Index w = std::min(block, d - c);
    gram.middleCols(c, w) = gram_product(op, Eigen::MatrixXd::Identity(d, d).middleCols(c, w));
  }
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  Eigenpairs out;
  out.values = es.eigenvalues().reverse().head(k);
  out.vectors = es.eigenvectors().rowwise().reverse().leftCols(k);
  return out;
}

Eigenpairs lanczos_pairs(const LinearOperator& op, const Axis& axis, Index k, std::uint64_t seed,
                         const SpectrumOptions& options) {
  const Index d = op.rows();
  if (d > std::numeric_limits<a_int>::max()) {
    throw CapacityError("axis '" + axis.name + "' is too long for the Lanczos solver");
  }
  const auto n = static_cast<a_int>(d);
  const auto nev = static_cast<a_int>(k);
  const Index wanted = options.krylov_dimension > 0 ? options.krylov_dimension
                                                    : std::max<Index>(2 * k + 1, k + 20);
  const auto ncv = static_cast<a_int>(std::clamp<Index>(wanted, k + 1, d));
  const a_int lworkl = ncv * (ncv + 8);
  const double tol = options.residual_tolerance;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd resid(d);
  for (Index i = 0; i < d; ++i) resid(i) = normal(rng);
  Eigen::MatrixXd basis(d, ncv);
  Eigen::VectorXd workd(3 * d);
  Eigen::VectorXd workl(lworkl);
  std::array<a_int, 11> iparam{};
  std::array<a_int, 14> ipntr{};
  iparam[0] = 1;  // exact shifts
  iparam[2] = options.max_restarts;
  iparam[6] = 1;  // standard problem, operator applied by the caller
  a_int ido = 0;
  a_int info = 1;  // start from resid
  while (true) {
    dsaupd_c(&ido, "I", n, "LA", nev, tol, resid.data(), ncv, basis.data(), n, iparam.data(),
             ipntr.data(), workd.data(), workl.data(), lworkl, &info);
    if (ido != 1 && ido != -1) break;
    const Eigen::Map<const Eigen::VectorXd> x(workd.data() + ipntr[0] - 1, d);
    Eigen::Map<Eigen::VectorXd>(workd.data() + ipntr[1] - 1, d) = gram_product(op, x);
  }
  if (info == 1) {
    std::ostringstream msg;
    msg << "axis '" << axis.name << "': Lanczos iteration did not converge after "
        << options.max_restarts << " restarts; " << iparam[4] << " of " << k
        << " eigenpairs reached the relative residual " << tol;
    throw NumericalError(msg.str());
  }
  if (info != 0) {
    throw NumericalError("axis '" + axis.name + "': Lanczos iteration failed (ARPACK code " +
                         std::to_string(info) + ")");
  }

  std::vector<a_int> select(static_cast<std::size_t>(ncv));
  Eigen::VectorXd values(k);
  Eigen::MatrixXd vectors(d, k);
  dseupd_c(1, "A", select.data(), values.data(), vectors.data(), n, 0.0, "I", n, "LA", nev, tol,
           resid.data(), ncv, basis.data(), n, iparam.data(), ipntr.data(), workd.data(),
           workl.data(), lworkl, &info);
  if (info != 0) {
    throw NumericalError("axis '" + axis.name + "': Ritz vector extraction failed (ARPACK code " +
                         std::to_string(info) + ")");
  }
  // ARPACK returns ascending order.
  Eigenpairs out;
  out.values = values.reverse();
  out.vectors = vectors.rowwise().reverse();
  out.restarts = static_cast<int>(iparam[2]);
  return out;
}

}  // namespace

AxisSpectrum operator_spectrum(const LinearOperator& op, Axis axis, Index k, std::uint64_t seed,
                               const SpectrumOptions& options) {
  const Index d = op.rows();
  const Index n = op.cols();
  const Index bound = std::min(d, n);
  if (k < 1 || k > bound) {
    throw RankError("axis '" + axis.name + "': requested " + std::to_string(k) +
                    " components but at most min(d, samples) = " + std::to_string(bound) +
                    " are attainable");
  }
  const bool dense = d <= options.dense_limit || k + 1 >= d;
  Eigenpairs pairs = dense ? dense_pairs(op, k) : lanczos_pairs(op, axis, k, seed, options);

  if (!(pairs.values(0) > 0.0)) {
    throw RankError("axis '" + axis.name + "': Gram matrix is zero");
  }
  const double cutoff = options.rank_cutoff * pairs.values(0);
  Index positive = 0;
  while (positive < k && pairs.values(positive) > cutoff) ++positive;
  if (positive < k) {
    throw RankError("axis '" + axis.name + "': only " + std::to_string(positive) + " of " +
                    std::to_string(k) + " requested Gram eigenvalues are numerically positive");
  }

  const Eigen::MatrixXd residual =
      gram_product(op, pairs.vectors) - pairs.vectors * pairs.values.asDiagonal();
  double worst = 0.0;
  for (Index c = 0; c < k; ++c) worst = std::max(worst, residual.col(c).norm());
  worst /= pairs.values(0);
  if (worst > options.residual_tolerance) {
    std::ostringstream msg;
    msg << "axis '" << axis.name << "': worst relative eigen residual " << worst << " exceeds "
        << options.residual_tolerance;
    throw NumericalError(msg.str());
  }

  AxisSpectrum out;
  out.axis = std::move(axis);
  out.k = k;
  out.eigenvectors = std::move(pairs.vectors);
  fix_signs(out.eigenvectors);
  out.gram_eigenvalues = std::move(pairs.values);
  out.gram_trace = op.squared_frobenius_norm();
  out.explained_variance_ratio =
      out.gram_trace > 0 ? std::min(1.0, out.gram_eigenvalues.sum() / out.gram_trace) : 0.0;
  out.iterations = pairs.restarts;
  out.max_relative_residual = worst;
  return out;
}

AxisSpectrum axis_spectrum(const Dataset& dataset, std::string_view axis, Index k,
                           std::uint64_t seed, const SpectrumOptions& options) {
  const std::size_t id = dataset.axis_index(axis);
  SparseOperator op(concatenated_matricization(dataset, id));
  return operator_spectrum(op, dataset.axes()[id], k, seed, options);
}

std::vector<ScreeRow> spectrum_report(const AxisSpectrum& spectrum, double full_trace) {
  std::vector<ScreeRow> rows;
  rows.reserve(static_cast<std::size_t>(spectrum.k));
  double cumulative = 0.0;
  for (Index c = 0; c < spectrum.k; ++c) {
    const double e = spectrum.gram_eigenvalues(c);
    const double fraction = full_trace > 0 ? e / full_trace : 0.0;
    cumulative += fraction;
    rows.push_back(ScreeRow{c + 1, e, fraction, cumulative});
  }
  return rows;
}

Index components_for_variance(const std::vector<ScreeRow>& scree, double target) {
  for (const ScreeRow& row : scree) {
    if (row.cumulative >= target) return row.component;
  }
  return 0;
}

AxisSpectrum truncate(const AxisSpectrum& spectrum, Index k) {
  if (k < 1 || k > spectrum.k) throw RankError("cannot truncate spectrum to " + std::to_string(k));
  AxisSpectrum out = spectrum;
  out.k = k;
  out.eigenvectors = spectrum.eigenvectors.leftCols(k);
  out.gram_eigenvalues = spectrum.gram_eigenvalues.head(k);
  out.explained_variance_ratio =
      out.gram_trace > 0 ? std::min(1.0, out.gram_eigenvalues.sum() / out.gram_trace) : 0.0;
  return out;
}

}  // namespace ksgraph
