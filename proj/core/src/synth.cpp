#include "ksgraph/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <set>
#include <sstream>

#include "ksgraph/dense_kronecker.hpp"
#include "ksgraph/error.hpp"

namespace ksgraph {

namespace {

// Fenwick tree over nonnegative weights supporting sampling by prefix mass.
class WeightTree {
 public:
  explicit WeightTree(Index n) : tree_(static_cast<std::size_t>(n) + 1, 0.0), weight_(static_cast<std::size_t>(n), 0.0) {}

  void set(Index i, double w) {
    const double delta = w - weight_[static_cast<std::size_t>(i)];
    weight_[static_cast<std::size_t>(i)] = w;
    for (std::size_t k = static_cast<std::size_t>(i) + 1; k < tree_.size(); k += k & (~k + 1)) {
      tree_[k] += delta;
    }
  }

  double weight(Index i) const { return weight_[static_cast<std::size_t>(i)]; }

  double total() const {
    double s = 0.0;
    for (std::size_t k = tree_.size() - 1; k > 0; k -= k & (~k + 1)) s += tree_[k];
    return s;
  }

  // Smallest index whose inclusive prefix sum exceeds u.
  Index find(double u) const {
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 < tree_.size()) step *= 2;
    for (; step > 0; step /= 2) {
      if (pos + step < tree_.size() && tree_[pos + step] <= u) {
        pos += step;
        u -= tree_[pos];
      }
    }
    return static_cast<Index>(std::min(pos, weight_.size() - 1));
  }

 private:
  std::vector<double> tree_;
  std::vector<double> weight_;
};

}  // namespace

GraphFactor generate_ba_factor(const BarabasiAlbertParams& params) {
  const Index d = params.d;
  const Index m = params.m;
  if (d < 2 || m < 1 || m >= d) throw DomainError("Barabasi-Albert needs 1 <= m < d");
  if (!(params.delta > 0.0)) throw DomainError("diagonal regularization must be positive");

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  WeightTree tree(d);
  std::vector<Index> degree(static_cast<std::size_t>(d), 0);
  std::vector<std::pair<Index, Index>> edges;
  tree.set(0, 1.0);
  std::vector<Index> chosen;
  for (Index v = 1; v < d; ++v) {
    const Index targets = std::min(m, v);
    chosen.clear();
    for (Index t = 0; t < targets; ++t) {
      const double u = unif(rng) * tree.total();
      const Index pick = tree.find(u);
      chosen.push_back(pick);
      tree.set(pick, 0.0);
    }
    for (Index u : chosen) {
      ++degree[static_cast<std::size_t>(u)];
      tree.set(u, static_cast<double>(degree[static_cast<std::size_t>(u)]) + 1.0);
      edges.emplace_back(std::min(u, v), std::max(u, v));
    }
    degree[static_cast<std::size_t>(v)] = targets;
    tree.set(v, static_cast<double>(targets) + 1.0);
  }
  std::sort(edges.begin(), edges.end());

  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& [i, j] : edges) {
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), -1.0);
    triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), -1.0);
  }
  for (Index i = 0; i < d; ++i) {
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i),
                          static_cast<double>(degree[static_cast<std::size_t>(i)]) + params.delta);
  }
  GraphFactor out;
  out.factor.resize(static_cast<int>(d), static_cast<int>(d));
  out.factor.setFromTriplets(triplets.begin(), triplets.end());
  out.edges = std::move(edges);
  return out;
}

std::vector<Eigen::MatrixXd> GroundTruth::dense_factors() const {
  std::vector<Eigen::MatrixXd> out;
  for (const GraphFactor& f : factors) out.emplace_back(Eigen::MatrixXd(f.factor));
  return out;
}

GroundTruth generate_ground_truth(const std::vector<Index>& lengths,
                                  std::vector<std::string> axis_names, Index m, double delta,
                                  std::uint64_t seed) {
  if (lengths.empty()) throw DomainError("need at least one axis");
  if (axis_names.empty()) {
    for (std::size_t l = 0; l < lengths.size(); ++l) axis_names.push_back("axis" + std::to_string(l + 1));
  }
  if (axis_names.size() != lengths.size()) throw StructuralError("need one name per axis length");
  GroundTruth truth;
  truth.axis_names = std::move(axis_names);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::vector<std::uint32_t> words(2 * lengths.size());
  seq.generate(words.begin(), words.end());
  for (std::size_t l = 0; l < lengths.size(); ++l) {
    BarabasiAlbertParams p{lengths[l], m, delta,
                           (static_cast<std::uint64_t>(words[2 * l]) << 32) | words[2 * l + 1]};
    truth.factors.push_back(generate_ba_factor(p));
    truth.params.push_back(p);
  }
  return truth;
}

Dataset sample_ks_normal(const std::vector<Eigen::MatrixXd>& factors,
                         const std::vector<std::string>& axis_names, Index replicates,
                         std::uint64_t seed, const std::string& modality_prefix) {
  if (factors.empty() || factors.size() != axis_names.size()) {
    throw StructuralError("need one axis name per factor");
  }
  if (replicates < 1) throw DomainError("replicate count must be positive");
  const std::size_t order = factors.size();
  std::vector<Eigen::MatrixXd> bases;
  std::vector<Eigen::VectorXd> spectra;
  std::vector<Index> shape;
  Index total = 1;
  double smallest = 0.0;
  for (const auto& f : factors) {
    if (f.rows() != f.cols() || f.rows() < 1) throw StructuralError("factors must be square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
    bases.push_back(es.eigenvectors());
    spectra.push_back(es.eigenvalues());
    smallest += es.eigenvalues().minCoeff();
    shape.push_back(f.rows());
    total = checked_multiply(total, f.rows(), "a sampled tensor");
  }
  if (!(smallest >= 1e-8)) {
    std::ostringstream msg;
    msg << "Kronecker sum of the factors is not positive definite (smallest eigenvalue " << smallest
        << ")";
    throw DomainError(msg.str());
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Modality> modalities;
  std::vector<double> buffer(static_cast<std::size_t>(total));
  std::vector<double> scratch(static_cast<std::size_t>(total));
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (Index r = 0; r < replicates; ++r) {
    std::vector<Index> idx(order, 0);
    for (Index flat = 0; flat < total; ++flat) {
      double sum = 0.0;
      for (std::size_t a = 0; a < order; ++a) sum += spectra[a](idx[a]);
      buffer[static_cast<std::size_t>(flat)] = normal(rng) / std::sqrt(sum);
      for (std::size_t a = order; a-- > 0;) {
        if (++idx[a] < shape[a]) break;
        idx[a] = 0;
      }
    }
    // Apply the eigenbasis of each factor along its axis.
    Index before = 1;
    for (std::size_t a = 0; a < order; ++a) {
      const Index d = shape[a];
      const Index after = total / (before * d);
      for (Index x = 0; x < before; ++x) {
        Eigen::Map<const RowMatrix> in(buffer.data() + x * d * after, d, after);
        Eigen::Map<RowMatrix> out(scratch.data() + x * d * after, d, after);
        out.noalias() = bases[a] * in;
      }
      std::swap(buffer, scratch);
      before *= d;
    }
    const std::string name =
        replicates == 1 ? modality_prefix : modality_prefix + "_" + std::to_string(r + 1);
    modalities.emplace_back(name, axis_names, SparseTensor::from_dense(shape, buffer));
  }
  return Dataset(std::move(modalities));
}

namespace {

struct DenseProblem {
  std::vector<Eigen::MatrixXd> gram;  // per axis, summed over modalities
};

DenseProblem dense_grams(const Dataset& dataset, const ModalityStructure& s, Index cap) {
  DenseProblem p;
  for (Index d : s.axis_length) p.gram.push_back(Eigen::MatrixXd::Zero(d, d));
  for (std::size_t g = 0; g < s.modality_count(); ++g) {
    if (s.modalities[g].total > cap) {
      throw CapacityError("modality '" + s.modalities[g].name + "' has " +
                          std::to_string(s.modalities[g].total) +
                          " cells, above the dense oracle limit of " + std::to_string(cap));
    }
    const Modality& m = dataset.modalities()[g];
    for (std::size_t q = 0; q < m.axes().size(); ++q) {
      const Eigen::MatrixXd mat = Eigen::MatrixXd(matricize(m, m.axes()[q]).cast<double>());
      p.gram[s.modalities[g].axes[q]] += mat * mat.transpose();
    }
  }
  return p;
}

Eigen::MatrixXd modality_precision(const ModalityLayout& m, const std::vector<Eigen::MatrixXd>& f) {
  std::vector<Eigen::MatrixXd> parts;
  for (std::size_t a : m.axes) parts.push_back(f[a]);
  return dense::kronecker_sum(parts);
}

struct DenseEval {
  bool feasible = false;
  double value = 0.0;
  std::vector<Eigen::MatrixXd> gradient;
};

DenseEval dense_evaluate(const DenseProblem& p, const ModalityStructure& s,
                         const std::vector<Eigen::MatrixXd>& f, bool need_gradient) {
  DenseEval out;
  double value = 0.0;
  for (std::size_t l = 0; l < f.size(); ++l) {
    value += 0.5 * (p.gram[l].cwiseProduct(f[l])).sum();
    if (need_gradient) out.gradient.push_back(0.5 * p.gram[l]);
  }
  for (const ModalityLayout& m : s.modalities) {
    const Eigen::MatrixXd omega = modality_precision(m, f);
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success) return out;
    const Eigen::VectorXd diag = Eigen::MatrixXd(llt.matrixL()).diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      if (!(diag(i) > 0.0)) return out;
      value -= std::log(diag(i));  // 0.5 * log det = sum log L_ii
    }
    if (need_gradient) {
      const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(omega.rows(), omega.cols()));
      for (std::size_t q = 0; q < m.order(); ++q) {
        out.gradient[m.axes[q]] -= 0.5 * dense::blockwise_trace(inv, m.before[q], m.after[q]);
      }
    }
  }
  out.feasible = true;
  out.value = value;
  return out;
}

double max_abs(const std::vector<Eigen::MatrixXd>& g) {
  double m = 0.0;
  for (const auto& x : g) m = std::max(m, x.cwiseAbs().maxCoeff());
  return m;
}

double inner(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
  return s;
}

}  // namespace

double dense_nll(const Dataset& dataset, const ModalityStructure& structure,
                 const std::vector<Eigen::MatrixXd>& factors) {
  const DenseProblem p = dense_grams(dataset, structure, Index{1} << 14);
  const DenseEval e = dense_evaluate(p, structure, factors, false);
  if (!e.feasible) throw DomainError("factors do not give a positive definite precision");
  return e.value;
}

OracleResult dense_oracle_mle(const Dataset& dataset, const ModalityStructure& structure,
                              const OracleOptions& options) {
  const DenseProblem p = dense_grams(dataset, structure, options.max_total_size);
  const std::size_t L = structure.axis_count();
  for (std::size_t l = 0; l < L; ++l) {
    // A null direction of the Gram lets the likelihood grow without bound.
    const Eigen::VectorXd e = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                  p.gram[l], Eigen::EigenvaluesOnly).eigenvalues();
    if (!(e(0) > 1e-12 * e(e.size() - 1))) {
      throw DomainError("axis '" + dataset.axes()[l].name +
                        "' has a singular Gram matrix; no maximum likelihood estimate exists "
                        "(add replicates or reduce the axis)");
    }
  }

  double cells = 0.0;
  double mass = 0.0;
  std::size_t widest = 1;
  for (std::size_t g = 0; g < structure.modality_count(); ++g) {
    cells += static_cast<double>(structure.modalities[g].total);
    mass += dataset.modalities()[g].tensor().squared_frobenius_norm();
    widest = std::max(widest, structure.modalities[g].order());
  }
  if (!(mass > 0.0)) throw DomainError("dense oracle needs nonzero data");
  const double start = cells / mass / static_cast<double>(widest);

  std::vector<Eigen::MatrixXd> f;
  for (Index d : structure.axis_length) f.push_back(start * Eigen::MatrixXd::Identity(d, d));
  DenseEval cur = dense_evaluate(p, structure, f, true);
  if (!cur.feasible) throw NumericalError("dense oracle start point is infeasible");

  std::deque<double> history{cur.value};
  double step = 1.0 / std::max(1.0, max_abs(cur.gradient));
  int it = 0;
  double gnorm = max_abs(cur.gradient);
  for (; it < options.max_iterations && gnorm > options.gradient_tolerance; ++it) {
    const double reference = *std::max_element(history.begin(), history.end());
    const double g2 = inner(cur.gradient, cur.gradient);
    double alpha = step;
    std::vector<Eigen::MatrixXd> next(L);
    DenseEval trial;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      for (std::size_t l = 0; l < L; ++l) next[l] = f[l] - alpha * cur.gradient[l];
      trial = dense_evaluate(p, structure, next, true);
      if (trial.feasible && trial.value <= reference - 1e-4 * alpha * g2) {
        accepted = true;
        break;
      }
      if (trial.feasible && trial.value <= cur.value &&
          max_abs(trial.gradient) < gnorm && std::abs(trial.value - cur.value) <=
                                                  1e-13 * std::max(1.0, std::abs(cur.value))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "dense oracle line search failed at iteration " << it << "; gradient " << gnorm;
      throw NumericalError(msg.str());
    }
    std::vector<Eigen::MatrixXd> s_vec(L), y_vec(L);
    for (std::size_t l = 0; l < L; ++l) {
      s_vec[l] = next[l] - f[l];
      y_vec[l] = trial.gradient[l] - cur.gradient[l];
    }
    const double sy = inner(s_vec, y_vec);
    const double ss = inner(s_vec, s_vec);
    step = sy > 0.0 ? ss / sy : 2.0 * alpha;
    f = std::move(next);
    cur = std::move(trial);
    gnorm = max_abs(cur.gradient);
    history.push_back(cur.value);
    if (history.size() > 10) history.pop_front();
  }
  if (gnorm > options.gradient_tolerance) {
    std::ostringstream msg;
    msg << "dense oracle did not converge; gradient " << gnorm;
    throw NumericalError(msg.str());
  }

  OracleResult out;
  out.raw_factors = f;
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd t = f[l];
    t.diagonal().array() -= f[l].trace() / static_cast<double>(f[l].rows());
    out.factors.push_back(std::move(t));
  }
  out.nll = cur.value;
  out.gradient_norm = gnorm;
  out.iterations = it;
  return out;
}

PrCurve pr_curve(const std::vector<Edge>& weighted,
                 const std::vector<std::pair<Index, Index>>& truth) {
  if (truth.empty()) throw DomainError("precision-recall needs a nonempty true edge set");
  std::set<std::pair<Index, Index>> truth_set;
  for (auto [i, j] : truth) truth_set.emplace(std::min(i, j), std::max(i, j));

  std::vector<std::pair<double, bool>> ranked;
  ranked.reserve(weighted.size());
  for (const Edge& e : weighted) {
    if (e.weight == 0.0) continue;
    ranked.emplace_back(std::abs(e.weight),
                        truth_set.count({std::min(e.i, e.j), std::max(e.i, e.j)}) > 0);
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  PrCurve curve;
  const double positives = static_cast<double>(truth_set.size());
  Index tp = 0;
  Index fp = 0;
  std::size_t k = 0;
  while (k < ranked.size()) {
    const double threshold = ranked[k].first;
    while (k < ranked.size() && ranked[k].first == threshold) {
      (ranked[k].second ? tp : fp) += 1;
      ++k;
    }
    curve.points.push_back(PrPoint{threshold, static_cast<double>(tp) / static_cast<double>(tp + fp),
                                   static_cast<double>(tp) / positives});
  }
  double area = 0.0;
  double prev_recall = 0.0;
  double prev_precision = curve.points.empty() ? 0.0 : curve.points.front().precision;
  for (const PrPoint& pt : curve.points) {
    area += (pt.recall - prev_recall) * 0.5 * (pt.precision + prev_precision);
    prev_recall = pt.recall;
    prev_precision = pt.precision;
  }
  curve.auprc = area;
  return curve;
}

}  // namespace ksgraph
