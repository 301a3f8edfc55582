#include "ksgraph/recompose.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace ksgraph {

namespace {

struct Candidate {
  double score;
  Index i;
  Index j;
  double weight;
};

// Strict total order: higher score first, then lexicographic (i, j).
bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

// Keeps the n best candidates. The heap top is the worst kept candidate.
class BoundedHeap {
 public:
  explicit BoundedHeap(Index n = 0) : n_(static_cast<std::size_t>(std::max<Index>(n, 0))) {}

  void offer(const Candidate& c) {
    if (n_ == 0) return;
    if (items_.size() < n_) {
      items_.push_back(c);
      std::push_heap(items_.begin(), items_.end(), better);
      return;
    }
    if (!better(c, items_.front())) return;
    std::pop_heap(items_.begin(), items_.end(), better);
    items_.back() = c;
    std::push_heap(items_.begin(), items_.end(), better);
  }

  // Cheap rejection test used before building a Candidate.
  bool could_accept(double score) const {
    return n_ > 0 && (items_.size() < n_ || score >= items_.front().score);
  }

  void merge(const BoundedHeap& other) {
    for (const Candidate& c : other.items_) offer(c);
  }

  const std::vector<Candidate>& items() const { return items_; }

 private:
  std::size_t n_;
  std::vector<Candidate> items_;
};

class PerVertex {
 public:
  PerVertex() = default;
  PerVertex(Index d, Index n) : heaps_(static_cast<std::size_t>(d), BoundedHeap(n)) {}

  bool active() const { return !heaps_.empty(); }

  void offer(Index i, Index j, double w) {
    const double s = std::abs(w);
    const Candidate c{s, i, j, w};
    auto& hi = heaps_[static_cast<std::size_t>(i)];
    auto& hj = heaps_[static_cast<std::size_t>(j)];
    if (hi.could_accept(s)) hi.offer(c);
    if (hj.could_accept(s)) hj.offer(c);
  }

  void merge(const PerVertex& other) {
    for (std::size_t v = 0; v < heaps_.size(); ++v) heaps_[v].merge(other.heaps_[v]);
  }

  void collect(std::vector<Candidate>& out) const {
    for (const auto& h : heaps_) out.insert(out.end(), h.items().begin(), h.items().end());
  }

 private:
  std::vector<BoundedHeap> heaps_;
};

// Per-worker state for one streaming pass.
struct Worker {
  BoundedHeap overall;
  PerVertex per_vertex;
  PerVertex minimum;
  std::vector<Candidate> above;
  Eigen::VectorXd mass;
};

template <typename Fn>
void parallel_blocks(const Eigen::MatrixXd& v, const Eigen::VectorXd& lambda, Index block_rows,
                     std::vector<Worker>& workers, Fn&& fn) {
  const Index d = v.rows();
  const Index nb = block_rows > 0 ? block_rows : default_block_rows(d);
  const Eigen::MatrixXd weighted = v * lambda.asDiagonal();
  const Index blocks = (d + nb - 1) / nb;
  const int threads = static_cast<int>(workers.size());
#pragma omp parallel num_threads(threads)
  {
    Worker& w = workers[static_cast<std::size_t>(omp_get_thread_num())];
    Eigen::MatrixXd block;
#pragma omp for schedule(dynamic, 1)
    for (Index b = 0; b < blocks; ++b) {
      const Index r0 = b * nb;
      const Index rows = std::min(nb, d - r0);
      block.noalias() = v.middleRows(r0, d - r0) * weighted.middleRows(r0, rows).transpose();
      for (Index a = 0; a < rows; ++a) {
        const double* col = block.col(a).data();
        for (Index c = a + 1; c < d - r0; ++c) {
          const double x = col[c];
          if (x != 0.0) fn(w, r0 + a, r0 + c, x);
        }
      }
    }
  }
}

}  // namespace

Index default_block_rows(Index d) {
  constexpr Index budget = Index{1} << 22;  // doubles per block
  return std::clamp<Index>(budget / std::max<Index>(d, 1), 1, 256);
}

FactorGraph recompose_threshold(const Axis& axis, const Eigen::MatrixXd& eigenvectors,
                                const Eigen::VectorXd& lambda, const ThresholdRule& rule,
                                const RecomposeOptions& options) {
  if (eigenvectors.cols() != lambda.size()) {
    throw StructuralError("axis '" + axis.name + "': " + std::to_string(eigenvectors.cols()) +
                          " eigenvectors but " + std::to_string(lambda.size()) + " eigenvalues");
  }
  if (eigenvectors.rows() != axis.length) {
    throw StructuralError("axis '" + axis.name + "': eigenvector length does not match axis");
  }
  if (rule.min_edges_per_vertex < 0) throw DomainError("min_edges_per_vertex must be nonnegative");
  const Index d = axis.length;
  const int threads = std::max(1, omp_get_max_threads());
  const Index m = rule.min_edges_per_vertex;

  auto fresh_workers = [&](auto&& init) {
    std::vector<Worker> workers(static_cast<std::size_t>(threads));
    for (Worker& w : workers) {
      if (m > 0) w.minimum = PerVertex(d, m);
      init(w);
    }
    return workers;
  };

  std::vector<Candidate> kept;
  std::vector<Worker> workers;

  if (const auto* r = std::get_if<rule::TopOverall>(&rule.variant)) {
    if (r->n < 0) throw DomainError("rule size must be nonnegative");
    workers = fresh_workers([&](Worker& w) { w.overall = BoundedHeap(r->n); });
    parallel_blocks(eigenvectors, lambda, options.block_rows, workers,
                    [m](Worker& w, Index i, Index j, double x) {
                      const double s = std::abs(x);
                      if (w.overall.could_accept(s)) w.overall.offer({s, i, j, x});
                      if (m > 0) w.minimum.offer(i, j, x);
                    });
    for (std::size_t t = 1; t < workers.size(); ++t) workers[0].overall.merge(workers[t].overall);
    kept = workers[0].overall.items();
  } else if (const auto* r = std::get_if<rule::TopPerVertex>(&rule.variant)) {
    if (r->n < 0) throw DomainError("rule size must be nonnegative");
    workers = fresh_workers([&](Worker& w) { w.per_vertex = PerVertex(d, r->n); });
    parallel_blocks(eigenvectors, lambda, options.block_rows, workers,
                    [m](Worker& w, Index i, Index j, double x) {
                      w.per_vertex.offer(i, j, x);
                      if (m > 0) w.minimum.offer(i, j, x);
                    });
    for (std::size_t t = 1; t < workers.size(); ++t) workers[0].per_vertex.merge(workers[t].per_vertex);
    workers[0].per_vertex.collect(kept);
  } else if (const auto* r = std::get_if<rule::DegreeDownweighted>(&rule.variant)) {
    if (r->n < 0) throw DomainError("rule size must be nonnegative");
    std::vector<Worker> pass(static_cast<std::size_t>(threads));
    for (Worker& w : pass) w.mass = Eigen::VectorXd::Zero(d);
    parallel_blocks(eigenvectors, lambda, options.block_rows, pass,
                    [](Worker& w, Index i, Index j, double x) {
                      const double s = std::abs(x);
                      w.mass(i) += s;
                      w.mass(j) += s;
                    });
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(d);
    for (const Worker& w : pass) mass += w.mass;
    pass.clear();
    workers = fresh_workers([&](Worker& w) { w.overall = BoundedHeap(r->n); });
    parallel_blocks(eigenvectors, lambda, options.block_rows, workers,
                    [m, &mass](Worker& w, Index i, Index j, double x) {
                      const double denom = std::sqrt(mass(i) * mass(j));
                      const double s = denom > 0.0 ? std::abs(x) / denom : 0.0;
                      if (w.overall.could_accept(s)) w.overall.offer({s, i, j, x});
                      if (m > 0) w.minimum.offer(i, j, x);
                    });
    for (std::size_t t = 1; t < workers.size(); ++t) workers[0].overall.merge(workers[t].overall);
    kept = workers[0].overall.items();
  } else {
    const auto& mag = std::get<rule::Magnitude>(rule.variant);
    if (!(mag.threshold >= 0.0)) throw DomainError("magnitude threshold must be nonnegative");
    const double cut = mag.threshold;
    workers = fresh_workers([](Worker&) {});
    parallel_blocks(eigenvectors, lambda, options.block_rows, workers,
                    [m, cut](Worker& w, Index i, Index j, double x) {
                      const double s = std::abs(x);
                      if (s > cut) w.above.push_back({s, i, j, x});
                      if (m > 0) w.minimum.offer(i, j, x);
                    });
    for (const Worker& w : workers) kept.insert(kept.end(), w.above.begin(), w.above.end());
  }

  if (m > 0) {
    for (std::size_t t = 1; t < workers.size(); ++t) workers[0].minimum.merge(workers[t].minimum);
    workers[0].minimum.collect(kept);
  }
  workers.clear();

  std::sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  kept.erase(std::unique(kept.begin(), kept.end(),
                         [](const Candidate& a, const Candidate& b) { return a.i == b.i && a.j == b.j; }),
             kept.end());

  FactorGraph g;
  g.axis = axis;
  g.degree.assign(static_cast<std::size_t>(d), 0);
  g.edges.reserve(kept.size());
  for (const Candidate& c : kept) {
    g.edges.push_back(Edge{c.i, c.j, c.weight});
    ++g.degree[static_cast<std::size_t>(c.i)];
    ++g.degree[static_cast<std::size_t>(c.j)];
  }
  return g;
}

}  // namespace ksgraph
