#include "ksgraph/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ksgraph/identify.hpp"
#include "ksgraph/synth.hpp"

namespace ksgraph {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Distinct, reproducible seeds per axis.
std::uint64_t axis_seed(std::uint64_t seed, std::size_t axis) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (axis + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Shortest text that still round-trips, for messages meant to be read.
std::string readable(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

std::string describe(const RuleVariant& v) {
  if (const auto* r = std::get_if<rule::TopOverall>(&v)) return "top-overall n=" + std::to_string(r->n);
  if (const auto* r = std::get_if<rule::TopPerVertex>(&v)) {
    return "top-per-vertex n=" + std::to_string(r->n);
  }
  if (const auto* r = std::get_if<rule::DegreeDownweighted>(&v)) {
    return "degree-downweighted n=" + std::to_string(r->n);
  }
  const auto& m = std::get<rule::Magnitude>(v);
  return "magnitude > " + readable(m.threshold);
}

template <typename F>
auto staged(const char* stage, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

json choice_json(const ComponentChoice& c) {
  return c.k > 0 ? json{{"k", c.k}} : json{{"variance", c.variance}};
}

}  // namespace

ThresholdKind parse_threshold_kind(const std::string& name) {
  if (name == "significance") return ThresholdKind::significance;
  if (name == "top-overall") return ThresholdKind::top_overall;
  if (name == "top-per-vertex") return ThresholdKind::top_per_vertex;
  if (name == "degree-downweighted") return ThresholdKind::degree_downweighted;
  if (name == "magnitude") return ThresholdKind::magnitude;
  throw DomainError("unknown threshold rule '" + name + "'");
}

std::string threshold_kind_name(ThresholdKind kind) {
  switch (kind) {
    case ThresholdKind::significance:
      return "significance";
    case ThresholdKind::top_overall:
      return "top-overall";
    case ThresholdKind::top_per_vertex:
      return "top-per-vertex";
    case ThresholdKind::degree_downweighted:
      return "degree-downweighted";
    case ThresholdKind::magnitude:
      return "magnitude";
  }
  return "unknown";
}

void validate(const RunConfig& config) {
  auto check_choice = [](const ComponentChoice& c, const std::string& where) {
    const bool has_k = c.k > 0;
    const bool has_v = c.variance > 0.0;
    if (has_k == has_v) {
      throw DomainError(where + ": give exactly one of a component count or a variance target");
    }
    if (has_v && c.variance > 1.0) throw DomainError(where + ": variance target must be in (0, 1]");
  };
  check_choice(config.components, "components");
  for (const auto& [axis, c] : config.axis_components) check_choice(c, "components for " + axis);
  if (config.max_components < 1) throw DomainError("max components must be positive");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (config.threshold_n < 0) throw DomainError("threshold count must be nonnegative");
  if (config.magnitude < 0.0) throw DomainError("magnitude threshold must be nonnegative");
  if (config.min_edges_per_vertex < 0) throw DomainError("minimum edges must be nonnegative");
  if (!(config.epsilon_scale > 0.0)) throw DomainError("epsilon scale must be positive");
  if (config.solver_max_iterations < 1) throw DomainError("solver iterations must be positive");
  if (config.hypothesis == HypothesisMode::custom) {
    throw DomainError("custom hypotheses are only available through the library");
  }
}

HypothesisMode resolved_hypothesis(const RunConfig& config) {
  if (config.hypothesis) return *config.hypothesis;
  return config.nonparanormal ? HypothesisMode::per_axis_standardized
                              : HypothesisMode::unit_variance;
}

std::unique_ptr<LinearOperator> axis_operator(const Dataset& dataset, std::size_t axis,
                                              bool nonparanormal, TieMethod ties) {
  if (nonparanormal) {
    return std::make_unique<ShiftedSparse>(
        nonparanormal_matricization(dataset, dataset.axes()[axis].name, ties));
  }
  return std::make_unique<SparseOperator>(concatenated_matricization(dataset, axis));
}

AxisSpectrum choose_spectrum(const LinearOperator& op, const Axis& axis, ComponentChoice choice,
                             Index max_components, std::uint64_t seed,
                             const SpectrumOptions& options, std::vector<std::string>* warnings) {
  if (choice.k > 0) return operator_spectrum(op, axis, choice.k, seed, options);
  const Index cap = std::min({max_components, op.rows(), op.cols()});
  Index k = std::min<Index>(cap, 32);
  std::optional<AxisSpectrum> last;
  while (true) {
    AxisSpectrum spec;
    try {
      spec = operator_spectrum(op, axis, k, seed, options);
    } catch (const RankError&) {
      if (last) break;
      if (k == 1) throw;
      k = std::max<Index>(1, k / 2);
      continue;
    }
    const auto scree = spectrum_report(spec, spec.gram_trace);
    const Index needed = components_for_variance(scree, choice.variance);
    if (needed > 0) return truncate(spec, needed);
    last = std::move(spec);
    if (k >= cap) break;
    k = std::min(cap, 2 * k);
  }
  if (warnings) {
    warnings->push_back("axis '" + axis.name + "': variance target " +
                        readable(choice.variance) + " not reached; using k = " +
                        std::to_string(last->k) + " explaining " +
                        readable(last->explained_variance_ratio));
  }
  return *last;
}

PrSummary evaluate_against_truth(const AxisResult& axis,
                                 const std::vector<std::pair<Index, Index>>& truth,
                                 Index sweep_limit) {
  PrSummary s;
  s.axis = axis.graph.axis.name;
  std::set<std::pair<Index, Index>> truth_set;
  for (auto [i, j] : truth) truth_set.emplace(std::min(i, j), std::max(i, j));
  s.true_edges = static_cast<Index>(truth_set.size());
  s.retained = static_cast<Index>(axis.graph.edges.size());
  Index tp = 0;
  for (const Edge& e : axis.graph.edges) tp += truth_set.count({e.i, e.j}) ? 1 : 0;
  s.precision = s.retained > 0 ? static_cast<double>(tp) / static_cast<double>(s.retained) : 0.0;
  s.recall = s.true_edges > 0 ? static_cast<double>(tp) / static_cast<double>(s.true_edges) : 0.0;
  const Index d = axis.spectrum.eigenvectors.rows();
  if (!truth_set.empty() && d <= sweep_limit) {
    std::vector<Edge> all;
    all.reserve(static_cast<std::size_t>(d * (d - 1) / 2));
    for_each_off_diagonal(axis.spectrum.eigenvectors, axis.lambda,
                          [&](Index i, Index j, double w) { all.push_back(Edge{i, j, w}); });
    s.auprc = pr_curve(all, truth).auprc;
  }
  return s;
}

EstimateResult estimate(const Dataset& dataset, const RunConfig& config) {
  validate(config);
  EstimateResult out;
  out.structure = staged("structure", [&] { return build_structure(dataset); });
  const ModalityStructure& s = out.structure;
  const std::size_t L = s.axis_count();

  auto t0 = Clock::now();
  staged("eigenvectors", [&] {
    for (std::size_t l = 0; l < L; ++l) {
      const auto op = axis_operator(dataset, l, config.nonparanormal, config.ties);
      const auto it = config.axis_components.find(s.axis_name[l]);
      const ComponentChoice choice =
          it != config.axis_components.end() ? it->second : config.components;
      AxisResult r;
      r.spectrum = choose_spectrum(*op, dataset.axes()[l], choice, config.max_components,
                                   axis_seed(config.seed, l), config.spectrum, &out.warnings);
      r.scree = spectrum_report(r.spectrum, r.spectrum.gram_trace);
      out.axes.push_back(std::move(r));
    }
    return 0;
  });
  out.timings.eigenvectors = seconds_since(t0);

  t0 = Clock::now();
  out.solution = staged("eigenvalues", [&] {
    AxisVectors e;
    for (const AxisResult& r : out.axes) e.push_back(r.spectrum.gram_eigenvalues);
    SolverOptions opts;
    opts.tolerance = config.solver_tolerance;
    opts.max_iterations = config.solver_max_iterations;
    opts.metric = config.metric;
    if (config.epsilon_scale != 1.0) {
      for (const auto& x : e) opts.epsilon.push_back(config.epsilon_scale * 1e-10 / x.minCoeff());
    }
    return solve_eigenvalues(e, s, opts);
  });
  out.warnings.insert(out.warnings.end(), out.solution.warnings.begin(),
                      out.solution.warnings.end());
  out.timings.eigenvalues = seconds_since(t0);

  t0 = Clock::now();
  staged("recomposition", [&] {
    const TraceStructure trace = build_trace_structure(s);
    const NullHypothesis h = resolved_hypothesis(config) == HypothesisMode::per_axis_standardized
                                 ? NullHypothesis::per_axis_standardized(s)
                                 : NullHypothesis::unit_variance(s);
    bool testable = true;
    try {
      check_hypothesis(h, s, trace);
    } catch (const HypothesisError& e) {
      if (config.threshold == ThresholdKind::significance) throw;
      testable = false;
      out.warnings.push_back(std::string("edge statistics skipped: ") + e.what());
    }
    out.n_tests = bonferroni_test_count(s);
    for (std::size_t l = 0; l < L; ++l) {
      AxisResult& r = out.axes[l];
      r.lambda = out.solution.lambda[l];
      const Index d = s.axis_length[l];
      const Index n = config.threshold_n > 0 ? config.threshold_n : 10 * d;
      ThresholdRule tr;
      tr.min_edges_per_vertex = config.min_edges_per_vertex;
      switch (config.threshold) {
        case ThresholdKind::significance:
          r.critical_magnitude = critical_magnitude(l, s, h, config.alpha, out.n_tests);
          tr.variant = rule::Magnitude{r.critical_magnitude, config.alpha};
          break;
        case ThresholdKind::top_overall:
          tr.variant = rule::TopOverall{n};
          break;
        case ThresholdKind::top_per_vertex:
          tr.variant = rule::TopPerVertex{config.threshold_n > 0 ? config.threshold_n : 10};
          break;
        case ThresholdKind::degree_downweighted:
          tr.variant = rule::DegreeDownweighted{n};
          break;
        case ThresholdKind::magnitude:
          tr.variant = rule::Magnitude{config.magnitude, config.alpha};
          break;
      }
      r.graph = recompose_threshold(dataset.axes()[l], r.spectrum.eigenvectors, r.lambda, tr);
      r.rule = describe(tr.variant);
      if (config.threshold == ThresholdKind::significance && r.graph.edges.empty()) {
        tr.variant = rule::DegreeDownweighted{10 * d};
        r.graph = recompose_threshold(dataset.axes()[l], r.spectrum.eigenvectors, r.lambda, tr);
        r.fallback = true;
        r.rule = describe(tr.variant);
        out.warnings.push_back("axis '" + s.axis_name[l] +
                               "': no significant edges at alpha " + readable(config.alpha) +
                               "; fell back to " + r.rule);
      }
      if (testable) attach_statistics(r.graph, l, s, h, out.n_tests);
    }
    return 0;
  });
  out.timings.recomposition = seconds_since(t0);
  return out;
}

namespace {

json report_json(const RunConfig& c, const Dataset& dataset, const EstimateResult& r) {
  json cfg = {
      {"manifest", c.manifest.string()},
      {"output_dir", c.output_dir.string()},
      {"components", choice_json(c.components)},
      {"max_components", c.max_components},
      {"nonparanormal", c.nonparanormal},
      {"ties", c.ties == TieMethod::average ? "average" : "minimum"},
      {"threshold", threshold_kind_name(c.threshold)},
      {"threshold_n", c.threshold_n},
      {"magnitude", c.magnitude},
      {"min_edges_per_vertex", c.min_edges_per_vertex},
      {"alpha", c.alpha},
      {"hypothesis", resolved_hypothesis(c) == HypothesisMode::unit_variance ? "unit-variance"
                                                                   : "per-axis-standardized"},
      {"solver_tolerance", c.solver_tolerance},
      {"solver_max_iterations", c.solver_max_iterations},
      {"epsilon_scale", c.epsilon_scale},
      {"metric", c.metric == StepMetric::diagonal ? "diagonal" : "identity"},
      {"seed", c.seed},
      {"threads", c.threads},
  };
  for (const auto& [axis, choice] : c.axis_components) cfg["axis_components"][axis] = choice_json(choice);

  json doc;
  doc["config"] = cfg;
  doc["modalities"] = json::array();
  for (const Modality& m : dataset.modalities()) {
    doc["modalities"].push_back(
        {{"name", m.name()}, {"axes", m.axes()}, {"shape", m.tensor().shape()}, {"nnz", m.tensor().nnz()}});
  }
  doc["axes"] = json::array();
  for (std::size_t l = 0; l < r.axes.size(); ++l) {
    const AxisResult& a = r.axes[l];
    doc["axes"].push_back({
        {"name", a.spectrum.axis.name},
        {"length", a.spectrum.axis.length},
        {"k", a.spectrum.k},
        {"explained_variance", a.spectrum.explained_variance_ratio},
        {"spectrum_iterations", a.spectrum.iterations},
        {"max_relative_residual", a.spectrum.max_relative_residual},
        {"rule", a.rule},
        {"fallback", a.fallback},
        {"critical_magnitude", a.critical_magnitude},
        {"edges", a.graph.edges.size()},
        {"eigenvalue_floor", r.solution.epsilon.empty() ? 0.0 : r.solution.epsilon[l]},
        {"pinned", r.solution.pinned.empty() ? false : static_cast<bool>(r.solution.pinned[l])},
    });
  }
  doc["solver"] = {{"iterations", r.solution.iterations},
                   {"gradient_norm", r.solution.final_gradient_norm},
                   {"nll", r.solution.nll}};
  doc["tests"] = r.n_tests;
  doc["warnings"] = r.warnings;
  doc["precision_recall"] = json::array();
  for (const PrSummary& p : r.pr) {
    json entry = {{"axis", p.axis},     {"true_edges", p.true_edges}, {"retained", p.retained},
                  {"precision", p.precision}, {"recall", p.recall}};
    entry["auprc"] = p.auprc ? json(*p.auprc) : json(nullptr);
    doc["precision_recall"].push_back(entry);
  }
  doc["timings"] = {{"ingest", r.timings.ingest},
                    {"eigenvectors", r.timings.eigenvectors},
                    {"eigenvalues", r.timings.eigenvalues},
                    {"recomposition", r.timings.recomposition},
                    {"output", r.timings.output},
                    {"total", r.timings.total}};
  return doc;
}

}  // namespace

EstimateResult run_estimate(const RunConfig& config) {
  const auto start = Clock::now();
  staged("config", [&] {
    validate(config);
    return 0;
  });
  Manifest manifest = staged("ingest", [&] { return load_manifest(config.manifest); });
  Dataset dataset = staged("ingest", [&] { return ingest(manifest); });
  const double ingest_time = seconds_since(start);

  EstimateResult result = estimate(dataset, config);
  result.timings.ingest = ingest_time;

  const auto t0 = Clock::now();
  staged("output", [&] {
    fs::create_directories(config.output_dir);
    for (const AxisResult& a : result.axes) {
      const std::string& name = a.graph.axis.name;
      write_edges_tsv(a.graph, config.output_dir / ("edges_" + name + ".tsv"));
      write_scree_csv(a.scree, config.output_dir / ("scree_" + name + ".csv"));
      if (const auto it = manifest.axis_labels.find(name); it != manifest.axis_labels.end()) {
        const auto labels = read_labels(it->second);
        if (static_cast<Index>(labels.size()) != a.graph.axis.length) {
          throw IngestError(it->second.string() + ": expected " +
                            std::to_string(a.graph.axis.length) + " labels, found " +
                            std::to_string(labels.size()));
        }
        std::ofstream out(config.output_dir / ("vertices_" + name + ".tsv"));
        out << "index\tlabel\n";
        for (std::size_t i = 0; i < labels.size(); ++i) out << i + 1 << '\t' << labels[i] << '\n';
      }
      if (const auto it = manifest.ground_truth.find(name); it != manifest.ground_truth.end()) {
        result.pr.push_back(evaluate_against_truth(a, read_edge_set(it->second)));
      }
    }
    return 0;
  });
  result.timings.output = seconds_since(t0);
  result.timings.total = seconds_since(start);

  staged("output", [&] {
    std::ofstream out(config.output_dir / "report.json");
    if (!out) throw IngestError("cannot write report.json");
    out << report_json(config, dataset, result).dump(2) << '\n';
    return 0;
  });
  return result;
}

}  // namespace ksgraph
