#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ksgraph/dataset.hpp"
#include "ksgraph/eigensolver.hpp"
#include "ksgraph/error.hpp"
#include "ksgraph/io.hpp"
#include "ksgraph/nonparanormal.hpp"
#include "ksgraph/recompose.hpp"
#include "ksgraph/spectrum.hpp"
#include "ksgraph/stat_test.hpp"

namespace ksgraph {

// Exactly one of `k` (> 0) and `variance` (in (0, 1]) is set.
struct ComponentChoice {
  Index k = 0;
  double variance = 0.0;

  static ComponentChoice fixed(Index k) { return {k, 0.0}; }
  static ComponentChoice explained(double target) { return {0, target}; }
};

enum class ThresholdKind { significance, top_overall, top_per_vertex, degree_downweighted, magnitude };

ThresholdKind parse_threshold_kind(const std::string& name);
std::string threshold_kind_name(ThresholdKind kind);

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir;

  ComponentChoice components = ComponentChoice::explained(0.9);
  std::map<std::string, ComponentChoice> axis_components;
  // Upper bound on k while searching for a variance target.
  Index max_components = 256;

  bool nonparanormal = true;
  TieMethod ties = TieMethod::average;

  ThresholdKind threshold = ThresholdKind::significance;
  // Edge count for the top-n rules; 0 means 10 per vertex.
  Index threshold_n = 0;
  double magnitude = 0.0;
  Index min_edges_per_vertex = 0;
  double alpha = 0.05;
  // Unset picks per-axis-standardized after the rank transform and unit
  // variance otherwise.
  std::optional<HypothesisMode> hypothesis;

  double solver_tolerance = 0.0;
  int solver_max_iterations = 10000;
  double epsilon_scale = 1.0;
  StepMetric metric = StepMetric::diagonal;

  SpectrumOptions spectrum;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 keeps the runtime default
};

// Throws DomainError on inconsistent settings.
void validate(const RunConfig& config);

HypothesisMode resolved_hypothesis(const RunConfig& config);

struct StageTimings {
  double ingest = 0.0;
  double eigenvectors = 0.0;
  double eigenvalues = 0.0;
  double recomposition = 0.0;
  double output = 0.0;
  double total = 0.0;
};

struct AxisResult {
  AxisSpectrum spectrum;
  std::vector<ScreeRow> scree;
  Eigen::VectorXd lambda;
  FactorGraph graph;
  std::string rule;      // rule actually applied
  bool fallback = false;  // significance found nothing and the fallback ran
  double critical_magnitude = 0.0;
};

struct PrSummary {
  std::string axis;
  Index true_edges = 0;
  Index retained = 0;
  double precision = 0.0;  // of the retained edges
  double recall = 0.0;
  std::optional<double> auprc;  // over the full off-diagonal sweep, small axes only
};

struct EstimateResult {
  ModalityStructure structure;
  std::vector<AxisResult> axes;
  EigenvalueSolution solution;
  Index n_tests = 0;
  std::vector<std::string> warnings;
  std::vector<PrSummary> pr;
  StageTimings timings;
};

// Everything after ingestion, in memory. Timings other than ingest/output
// are filled in.
EstimateResult estimate(const Dataset& dataset, const RunConfig& config);

// Matricization operator for one axis, with or without the rank transform.
std::unique_ptr<LinearOperator> axis_operator(const Dataset& dataset, std::size_t axis,
                                              bool nonparanormal, TieMethod ties);

// Spectrum under a fixed k or a variance target (doubling search capped at
// max_components).
AxisSpectrum choose_spectrum(const LinearOperator& op, const Axis& axis, ComponentChoice choice,
                             Index max_components, std::uint64_t seed,
                             const SpectrumOptions& options, std::vector<std::string>* warnings);

// Precision/recall of the retained edges and, for axes up to `sweep_limit`
// vertices, AUPRC over all off-diagonal weights.
PrSummary evaluate_against_truth(const AxisResult& axis,
                                 const std::vector<std::pair<Index, Index>>& truth,
                                 Index sweep_limit = 4096);

// Ingests the manifest, runs estimate(), writes edges_<axis>.tsv,
// scree_<axis>.csv and report.json into the output directory.
EstimateResult run_estimate(const RunConfig& config);

// Stage-tagged error raised by run_estimate.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace ksgraph
