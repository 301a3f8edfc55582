#include "ksgraph/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

#include "ksgraph/error.hpp"

namespace ksgraph {

namespace {

struct GridSums {
  std::vector<Eigen::VectorXd> inverse;         // per modality position
  std::vector<Eigen::VectorXd> inverse_square;  // filled when requested
  double log_sum = 0.0;
};

void require_positive(std::span<const Eigen::VectorXd* const> lambdas) {
  for (const Eigen::VectorXd* v : lambdas) {
    if (v->size() == 0) throw StructuralError("empty eigenvalue vector");
    if (!(v->minCoeff() > 0.0)) throw DomainError("eigenvalues must be strictly positive");
  }
}

// One pass over the eigenvalue-sum grid of a modality.
GridSums grid_pass(std::span<const Eigen::VectorXd* const> lambdas, bool squares, bool logs) {
  const std::size_t order = lambdas.size();
  GridSums out;
  out.inverse.reserve(order);
  for (const Eigen::VectorXd* v : lambdas) out.inverse.push_back(Eigen::VectorXd::Zero(v->size()));
  if (squares) out.inverse_square = out.inverse;

  const Eigen::VectorXd& last = *lambdas[order - 1];
  const Index inner = last.size();
  Eigen::VectorXd& acc_last = out.inverse[order - 1];
  Eigen::VectorXd* sq_last = squares ? &out.inverse_square[order - 1] : nullptr;

  std::vector<Index> idx(order - 1, 0);
  double log_sum = 0.0;
  while (true) {
    double prefix = 0.0;
    for (std::size_t p = 0; p + 1 < order; ++p) prefix += (*lambdas[p])(idx[p]);
    double row = 0.0;
    double row_sq = 0.0;
    for (Index j = 0; j < inner; ++j) {
      const double s = prefix + last(j);
      const double v = 1.0 / s;
      acc_last(j) += v;
      row += v;
      if (sq_last) {
        const double v2 = v * v;
        (*sq_last)(j) += v2;
        row_sq += v2;
      }
      if (logs) log_sum += std::log(s);
    }
    for (std::size_t p = 0; p + 1 < order; ++p) {
      out.inverse[p](idx[p]) += row;
      if (squares) out.inverse_square[p](idx[p]) += row_sq;
    }
    std::size_t p = order - 1;
    while (p > 0) {
      --p;
      if (++idx[p] < lambdas[p]->size()) break;
      idx[p] = 0;
      if (p == 0) {
        out.log_sum = log_sum;
        return out;
      }
    }
    if (order == 1) break;
  }
  out.log_sum = log_sum;
  return out;
}

struct Evaluation {
  double value = 0.0;
  AxisVectors gradient;
  AxisVectors curvature;  // diagonal of the Hessian
};

Evaluation evaluate(const AxisVectors& e, const AxisVectors& lambda, const ModalityStructure& s,
                    bool need_value, bool need_curvature) {
  const std::size_t L = s.axis_count();
  Evaluation out;
  out.gradient.resize(L);
  if (need_curvature) out.curvature.resize(L);
  double value = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    out.gradient[l] = 0.5 * e[l];
    if (need_curvature) out.curvature[l] = Eigen::VectorXd::Zero(e[l].size());
    if (need_value) value += 0.5 * e[l].dot(lambda[l]);
  }
  std::vector<const Eigen::VectorXd*> axes;
  for (const ModalityLayout& m : s.modalities) {
    axes.clear();
    for (std::size_t a : m.axes) axes.push_back(&lambda[a]);
    const GridSums g = grid_pass(axes, need_curvature, need_value);
    for (std::size_t p = 0; p < m.order(); ++p) {
      out.gradient[m.axes[p]] -= 0.5 * g.inverse[p];
      if (need_curvature) out.curvature[m.axes[p]] += 0.5 * g.inverse_square[p];
    }
    value -= 0.5 * g.log_sum;
  }
  out.value = value;
  return out;
}

void check_shapes(const AxisVectors& e, const AxisVectors& lambda, const ModalityStructure& s) {
  if (e.size() != s.axis_count() || lambda.size() != s.axis_count()) {
    throw StructuralError("eigenvalue vectors do not match the number of axes");
  }
  for (std::size_t l = 0; l < e.size(); ++l) {
    if (e[l].size() != lambda[l].size()) {
      throw StructuralError("Gram and precision eigenvalue lengths differ on axis " +
                            std::to_string(l));
    }
  }
  std::vector<const Eigen::VectorXd*> ptrs;
  for (const auto& v : lambda) ptrs.push_back(&v);
  require_positive(ptrs);
}

double projected_norm(const AxisVectors& g, const AxisVectors& lambda,
                      const std::vector<double>& eps, AxisVectors* projected) {
  double norm = 0.0;
  if (projected) projected->resize(g.size());
  for (std::size_t l = 0; l < g.size(); ++l) {
    Eigen::VectorXd p = g[l];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (lambda[l](i) <= eps[l] && p(i) > 0.0) p(i) = 0.0;
    }
    norm = std::max(norm, p.cwiseAbs().maxCoeff());
    if (projected) (*projected)[l] = std::move(p);
  }
  return norm;
}

// Axis shifts that cancel inside every modality: the NLL is linear along
// them, so the minimum over the floor-constrained set sits on its boundary.
std::vector<Eigen::VectorXd> shift_directions(const ModalityStructure& s) {
  Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.modality_count()),
                                                    static_cast<Eigen::Index>(s.axis_count()));
  for (std::size_t g = 0; g < s.modality_count(); ++g) {
    for (std::size_t a : s.modalities[g].axes) incidence(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(a)) = 1.0;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(incidence);
  std::vector<Eigen::VectorXd> out;
  if (lu.dimensionOfKernel() == 0) return out;
  const Eigen::MatrixXd kernel = lu.kernel();
  for (Eigen::Index c = 0; c < kernel.cols(); ++c) out.push_back(kernel.col(c) / kernel.col(c).lpNorm<1>());
  return out;
}

}  // namespace

Eigen::VectorXd ks_diag_sbtrace_inverse(std::span<const Eigen::VectorXd> lambdas,
                                        std::size_t target) {
  if (target >= lambdas.size()) throw StructuralError("target axis out of range");
  std::vector<const Eigen::VectorXd*> ptrs;
  for (const auto& v : lambdas) ptrs.push_back(&v);
  require_positive(ptrs);
  return grid_pass(ptrs, false, false).inverse[target];
}

AxisVectors nll_gradient(const AxisVectors& gram_eigenvalues, const AxisVectors& lambdas,
                         const ModalityStructure& structure) {
  check_shapes(gram_eigenvalues, lambdas, structure);
  return evaluate(gram_eigenvalues, lambdas, structure, false, false).gradient;
}

double nll_value(const AxisVectors& gram_eigenvalues, const AxisVectors& lambdas,
                 const ModalityStructure& structure) {
  check_shapes(gram_eigenvalues, lambdas, structure);
  return evaluate(gram_eigenvalues, lambdas, structure, true, false).value;
}

EigenvalueSolution solve_eigenvalues(const AxisVectors& gram_eigenvalues,
                                     const ModalityStructure& structure,
                                     const SolverOptions& options) {
  const std::size_t L = structure.axis_count();
  if (gram_eigenvalues.size() != L) {
    throw StructuralError("need one Gram eigenvalue vector per axis");
  }
  double e_max = 0.0;
  for (const auto& e : gram_eigenvalues) {
    if (e.size() == 0 || !(e.minCoeff() > 0.0)) {
      throw DomainError("Gram eigenvalues must be strictly positive");
    }
    e_max = std::max(e_max, e.maxCoeff());
  }
  const bool diagonal = options.metric == StepMetric::diagonal;

  std::vector<double> eps = options.epsilon;
  if (eps.empty()) {
    for (const auto& e : gram_eigenvalues) eps.push_back(1e-10 / e.minCoeff());
  }
  if (eps.size() != L) throw StructuralError("need one floor per axis");
  for (double x : eps) {
    if (!(x > 0.0)) throw DomainError("eigenvalue floors must be positive");
  }
  const double tol = options.tolerance > 0.0 ? options.tolerance : 1e-8 * e_max;

  AxisVectors lambda(L);
  for (std::size_t l = 0; l < L; ++l) {
    lambda[l] = gram_eigenvalues[l].cwiseInverse().cwiseMax(eps[l]);
  }

  Evaluation current = evaluate(gram_eigenvalues, lambda, structure, true, diagonal);

  // Sliding along a shift direction leaves every grid sum, and hence the
  // gradient, unchanged while the NLL moves by slope * t.
  const std::vector<Eigen::VectorXd> shifts = shift_directions(structure);
  std::vector<double> gram_totals;
  for (const auto& e : gram_eigenvalues) gram_totals.push_back(e.sum());
  auto slide_to_floor = [&] {
    for (const Eigen::VectorXd& c : shifts) {
      double slope = 0.0;
      for (std::size_t l = 0; l < L; ++l) slope += 0.5 * c(static_cast<Eigen::Index>(l)) * gram_totals[l];
      if (std::abs(slope) <= tol) continue;
      const double sign = slope > 0.0 ? -1.0 : 1.0;
      double room = std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < L; ++l) {
        const double step = sign * c(static_cast<Eigen::Index>(l));
        if (step < 0.0) room = std::min(room, (lambda[l].minCoeff() - eps[l]) / -step);
      }
      if (!(room > 0.0) || !std::isfinite(room)) continue;
      for (std::size_t l = 0; l < L; ++l) {
        lambda[l].array() += room * sign * c(static_cast<Eigen::Index>(l));
        lambda[l] = lambda[l].cwiseMax(eps[l]);
      }
      current.value += slope * sign * room;
    }
  };
  slide_to_floor();

  AxisVectors projected;
  double gnorm = projected_norm(current.gradient, lambda, eps, &projected);
  double mu = 1.0;
  constexpr double armijo = 1e-4;
  constexpr int floor_halvings = 20;
  constexpr int max_backtracks = 60;

  int iteration = 0;
  while (gnorm > tol) {
    if (iteration >= options.max_iterations) {
      std::ostringstream msg;
      msg << "eigenvalue solver did not converge in " << options.max_iterations
          << " iterations; last projected gradient norm " << gnorm << " (tolerance " << tol << ")";
      throw ConvergenceError(msg.str(), gnorm);
    }
    AxisVectors direction(L);
    for (std::size_t l = 0; l < L; ++l) {
      direction[l] = diagonal ? Eigen::VectorXd(-projected[l].cwiseQuotient(current.curvature[l]))
                              : Eigen::VectorXd(-projected[l]);
    }

    bool accepted = false;
    int crossings = 0;
    AxisVectors trial(L);
    Evaluation next;
    // Floor crossings shrink only this trial; the carried step size reacts to
    // objective rejections alone.
    double shrink = 1.0;
    for (int bt = 0; bt < max_backtracks; ++bt) {
      bool crosses = false;
      for (std::size_t l = 0; l < L; ++l) {
        trial[l] = lambda[l] + (mu * shrink) * direction[l];
        if ((trial[l].array() < eps[l]).any()) crosses = true;
      }
      if (crosses) {
        if (crossings < floor_halvings) {
          ++crossings;
          shrink *= 0.5;
          continue;
        }
        for (std::size_t l = 0; l < L; ++l) trial[l] = trial[l].cwiseMax(eps[l]);
      }
      next = evaluate(gram_eigenvalues, trial, structure, true, diagonal);
      double predicted = 0.0;
      for (std::size_t l = 0; l < L; ++l) predicted += current.gradient[l].dot(trial[l] - lambda[l]);
      const double slack = 1e-13 * std::max(1.0, std::abs(current.value));
      if (next.value <= current.value + armijo * predicted) {
        accepted = true;
      } else if (next.value <= current.value + slack) {
        // Objective differences have fallen to rounding level. By convexity a
        // non-positive slope at the trial point still certifies a decrease.
        double slope = 0.0;
        for (std::size_t l = 0; l < L; ++l) slope += next.gradient[l].dot(trial[l] - lambda[l]);
        accepted = slope <= 0.0;
      }
      if (accepted) break;
      mu *= 0.5;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "eigenvalue solver line search failed at iteration " << iteration
          << "; projected gradient norm " << gnorm;
      throw ConvergenceError(msg.str(), gnorm);
    }
    lambda = std::move(trial);
    current = std::move(next);
    slide_to_floor();
    gnorm = projected_norm(current.gradient, lambda, eps, &projected);
    mu = std::min(1.0, 1.5 * mu);
    ++iteration;
  }

  EigenvalueSolution out;
  out.iterations = iteration;
  out.final_gradient_norm = gnorm;
  out.nll = current.value;
  out.epsilon = eps;
  out.pinned.assign(L, false);
  for (std::size_t l = 0; l < L; ++l) {
    if ((lambda[l].array() <= eps[l] * (1.0 + 1e-12)).any()) {
      out.pinned[l] = true;
      out.warnings.push_back("axis '" + structure.axis_name[l] +
                             "': eigenvalues reached the floor; the factor rank is likely below k "
                             "and a smaller k is advisable");
    }
  }
  out.lambda = std::move(lambda);
  return out;
}

}  // namespace ksgraph
