#include "ksgraph/stat_test.hpp"

#include <cmath>
#include <sstream>

#include "ksgraph/error.hpp"
#include "ksgraph/normal.hpp"

namespace ksgraph {

NullHypothesis NullHypothesis::unit_variance(const ModalityStructure& structure) {
  return NullHypothesis{HypothesisMode::unit_variance,
                        std::vector<double>(structure.modality_count(), 1.0)};
}

NullHypothesis NullHypothesis::per_axis_standardized(const ModalityStructure& structure) {
  NullHypothesis h{HypothesisMode::per_axis_standardized, {}};
  for (const ModalityLayout& m : structure.modalities) {
    h.sigma_sq.push_back(1.0 / static_cast<double>(m.order()));
  }
  return h;
}

namespace {

void require_sizes(const NullHypothesis& h, const ModalityStructure& s) {
  if (h.sigma_sq.size() != s.modality_count()) {
    throw HypothesisError("hypothesis lists " + std::to_string(h.sigma_sq.size()) +
                          " variances for " + std::to_string(s.modality_count()) + " modalities");
  }
  for (double v : h.sigma_sq) {
    if (!(v > 0.0) || !std::isfinite(v)) throw HypothesisError("variances must be positive");
  }
}

// Sum over modalities containing the axis of d_total * sigma^4.
double axis_information(std::size_t axis, const ModalityStructure& s, const NullHypothesis& h) {
  if (axis >= s.axis_count()) throw StructuralError("axis index out of range");
  require_sizes(h, s);
  double sum = 0.0;
  for (const Membership& m : s.memberships[axis]) {
    const double v = h.sigma_sq[m.modality];
    sum += static_cast<double>(s.modalities[m.modality].total) * v * v;
  }
  return sum;
}

}  // namespace

void check_hypothesis(const NullHypothesis& h, const ModalityStructure& structure,
                      const TraceStructure& trace) {
  require_sizes(h, structure);
  const Eigen::MatrixXd b = trace.shift_coefficient_matrix();
  Eigen::VectorXd t(static_cast<Eigen::Index>(trace.rank));
  for (std::size_t i = 0; i < trace.rank; ++i) {
    t(static_cast<Eigen::Index>(i)) = 1.0 / h.sigma_sq[trace.basis_modalities[i]];
  }
  for (std::size_t g = 0; g < structure.modality_count(); ++g) {
    const double implied = b.row(static_cast<Eigen::Index>(g)).dot(t);
    const double wanted = 1.0 / h.sigma_sq[g];
    if (std::abs(implied - wanted) > 1e-9 * std::max(std::abs(wanted), std::abs(implied))) {
      std::ostringstream msg;
      msg << "null hypothesis is not identifiable: modality '" << structure.modalities[g].name
          << "' needs precision " << wanted << " but the other modalities imply " << implied;
      throw HypothesisError(msg.str());
    }
  }
}

FisherBlocks null_fisher_blocks(const ModalityStructure& structure, const TraceStructure& trace,
                                const NullHypothesis& h) {
  check_hypothesis(h, structure, trace);
  const std::size_t L = structure.axis_count();
  const auto r = static_cast<Eigen::Index>(trace.rank);
  const Eigen::MatrixXd b = trace.shift_coefficient_matrix();

  FisherBlocks f;
  f.axis_length = structure.axis_length;
  f.tt = Eigen::MatrixXd::Zero(r, r);
  f.t_diag = Eigen::MatrixXd::Zero(r, static_cast<Eigen::Index>(L));
  f.diag_cross = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
  f.diag_same = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L));
  f.edge = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L));

  for (std::size_t g = 0; g < structure.modality_count(); ++g) {
    const ModalityLayout& m = structure.modalities[g];
    const double s4 = h.sigma_sq[g] * h.sigma_sq[g];
    const double half = static_cast<double>(m.total) * s4 / 2.0;
    const Eigen::VectorXd a = b.row(static_cast<Eigen::Index>(g)).transpose();
    f.tt += half * a * a.transpose();
    for (std::size_t p = 0; p < m.order(); ++p) {
      const auto l = static_cast<Eigen::Index>(m.axes[p]);
      const double dl = static_cast<double>(structure.axis_length[m.axes[p]]);
      f.t_diag.col(l) += a * (half / dl);
      f.diag_same(l) += half / dl;
      f.edge(l) += half / (2.0 * dl);
      for (std::size_t q = 0; q < m.order(); ++q) {
        if (q == p) continue;
        const auto l2 = static_cast<Eigen::Index>(m.axes[q]);
        const double d2 = static_cast<double>(structure.axis_length[m.axes[q]]);
        f.diag_cross(l, l2) += half / (dl * d2);
      }
    }
  }
  return f;
}

Eigen::MatrixXd FisherBlocks::dense() const {
  const Eigen::Index r = tt.rows();
  const std::size_t L = axis_length.size();
  std::vector<Eigen::Index> diag_start(L), edge_start(L);
  Eigen::Index n = r;
  for (std::size_t l = 0; l < L; ++l) {
    diag_start[l] = n;
    n += axis_length[l] - 1;
  }
  for (std::size_t l = 0; l < L; ++l) {
    edge_start[l] = n;
    n += axis_length[l] * (axis_length[l] - 1) / 2;
  }
  if (n > 20000) throw CapacityError("Fisher matrix too large to densify");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  out.topLeftCorner(r, r) = tt;
  for (std::size_t l = 0; l < L; ++l) {
    const Eigen::Index dl = axis_length[l] - 1;
    const auto li = static_cast<Eigen::Index>(l);
    for (Eigen::Index j = 0; j < dl; ++j) {
      out.block(0, diag_start[l] + j, r, 1) = t_diag.col(li);
      out.block(diag_start[l] + j, 0, 1, r) = t_diag.col(li).transpose();
      out(diag_start[l] + j, diag_start[l] + j) = diag_same(li);
    }
    for (std::size_t l2 = 0; l2 < L; ++l2) {
      if (l2 == l) continue;
      out.block(diag_start[l], diag_start[l2], dl, axis_length[l2] - 1).setConstant(
          diag_cross(li, static_cast<Eigen::Index>(l2)));
    }
    const Eigen::Index edges = axis_length[l] * (axis_length[l] - 1) / 2;
    for (Eigen::Index e = 0; e < edges; ++e) out(edge_start[l] + e, edge_start[l] + e) = edge(li);
  }
  return out;
}

Index bonferroni_test_count(const ModalityStructure& structure) {
  Index n = 0;
  for (Index d : structure.axis_length) {
    n = checked_add(n, checked_multiply(d, d - 1, "the test count") / 2, "the test count");
  }
  return n;
}

double edge_z_scale(std::size_t axis, const ModalityStructure& structure, const NullHypothesis& h) {
  const double info = axis_information(axis, structure, h);
  return std::sqrt(info / static_cast<double>(structure.axis_length[axis])) / 2.0;
}

EdgeTestResult edge_test(double psi, std::size_t axis, const ModalityStructure& structure,
                         const NullHypothesis& h, Index n_tests) {
  if (n_tests < 1) throw DomainError("edge_test needs at least one test");
  EdgeTestResult out;
  out.axis = axis;
  out.psi = psi;
  out.z = edge_z_scale(axis, structure, h) * psi;
  out.p_raw = two_sided_p_value(out.z);
  out.p_bonferroni = std::min(1.0, static_cast<double>(n_tests) * out.p_raw);
  out.n_tests = n_tests;
  return out;
}

EdgeTestResult edge_test(double psi, std::size_t axis, const ModalityStructure& structure,
                         const NullHypothesis& h) {
  return edge_test(psi, axis, structure, h, bonferroni_test_count(structure));
}

double critical_magnitude(std::size_t axis, const ModalityStructure& structure,
                          const NullHypothesis& h, double alpha, Index n_tests) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (n_tests < 1) throw DomainError("critical_magnitude needs at least one test");
  const double tail = alpha / (2.0 * static_cast<double>(n_tests));
  const double z = -normal_quantile(tail);
  return std::max(0.0, z) / edge_z_scale(axis, structure, h);
}

rule::Magnitude significance_rule(std::size_t axis, const ModalityStructure& structure,
                                  const NullHypothesis& h, double alpha, Index n_tests) {
  return rule::Magnitude{critical_magnitude(axis, structure, h, alpha, n_tests), alpha};
}

void attach_statistics(FactorGraph& graph, std::size_t axis, const ModalityStructure& structure,
                       const NullHypothesis& h, Index n_tests) {
  const double scale = edge_z_scale(axis, structure, h);
  graph.statistics.clear();
  graph.statistics.reserve(graph.edges.size());
  for (const Edge& e : graph.edges) {
    const double z = scale * e.weight;
    const double p = two_sided_p_value(z);
    graph.statistics.push_back(
        EdgeStatistics{z, p, std::min(1.0, static_cast<double>(n_tests) * p)});
  }
}

}  // namespace ksgraph
