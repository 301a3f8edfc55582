#include <iostream>
#include <map>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "commands.hpp"
#include "ksgraph/error.hpp"

namespace {

using namespace ksgraph;

const std::map<std::string, TieMethod> kTies{{"average", TieMethod::average},
                                             {"minimum", TieMethod::minimum}};

void add_components(CLI::App* app, std::string& components,
                    std::vector<std::string>* per_axis, Index& max_components) {
  app->add_option("-k,--components", components,
                  "component count (integer) or explained-variance target (fraction in (0, 1])")
      ->capture_default_str();
  if (per_axis) {
    app->add_option("--axis-components", *per_axis,
                    "per-axis override as AXIS=VALUE, same syntax as --components");
  }
  app->add_option("--max-components", max_components,
                  "cap on k when searching for a variance target")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kronecker-sum graphical models for multi-axis sparse data"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "maximum worker threads (0 keeps the OpenMP default)")
      ->check(CLI::NonNegativeNumber);

  // estimate
  RunConfig config;
  std::string components = "0.9";
  std::vector<std::string> axis_components;
  std::string threshold = "significance";
  std::string hypothesis;
  std::string metric = "diagonal";
  bool raw = false;
  auto* est = app.add_subcommand("estimate", "estimate per-axis graphs from a manifest");
  est->add_option("-m,--manifest", config.manifest, "dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
  est->add_option("-o,--out", config.output_dir, "output directory")->required();
  add_components(est, components, &axis_components, config.max_components);
  est->add_flag("--no-nonparanormal", raw, "use the data as given instead of rank-transforming");
  est->add_option("--ties", config.ties, "tie handling of the rank transform")
      ->transform(CLI::CheckedTransformer(kTies, CLI::ignore_case));
  est->add_option("--threshold", threshold, "edge retention rule")
      ->check(CLI::IsMember({"significance", "top-overall", "top-per-vertex",
                             "degree-downweighted", "magnitude"}))
      ->capture_default_str();
  est->add_option("--threshold-n", config.threshold_n,
                  "edges for top-overall and degree-downweighted (default 10 d), per vertex for "
                  "top-per-vertex (default 10)");
  est->add_option("--magnitude", config.magnitude, "cutoff for the magnitude rule");
  est->add_option("--min-edges", config.min_edges_per_vertex, "guaranteed edges per vertex");
  est->add_option("--alpha", config.alpha, "family-wise significance level")->capture_default_str();
  est->add_option("--hypothesis", hypothesis,
                  "null variance hypothesis (default: per-axis-standardized with the rank "
                  "transform, unit-variance without)")
      ->check(CLI::IsMember({"unit-variance", "per-axis-standardized"}));
  est->add_option("--tol", config.solver_tolerance, "solver gradient tolerance (0: automatic)");
  est->add_option("--max-iter", config.solver_max_iterations, "solver iteration limit")
      ->capture_default_str();
  est->add_option("--eps-scale", config.epsilon_scale, "multiplier on the eigenvalue floor")
      ->capture_default_str();
  est->add_option("--metric", metric, "solver step metric")
      ->check(CLI::IsMember({"diagonal", "identity"}))
      ->capture_default_str();
  est->add_option("--seed", config.seed, "random seed")->capture_default_str();

  // spectrum
  cli::SpectrumCommand spec;
  std::string spec_components = "0.9";
  bool spec_raw = false;
  auto* sp = app.add_subcommand("spectrum", "leading Gram eigenvalues and scree tables");
  sp->add_option("-m,--manifest", spec.manifest, "dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
  sp->add_option("-o,--out", spec.output_dir, "output directory")->required();
  sp->add_option("--axis", spec.axes, "restrict to these axes");
  add_components(sp, spec_components, nullptr, spec.max_components);
  sp->add_flag("--no-nonparanormal", spec_raw, "use the data as given");
  sp->add_option("--ties", spec.ties, "tie handling of the rank transform")
      ->transform(CLI::CheckedTransformer(kTies, CLI::ignore_case));
  sp->add_option("--seed", spec.seed, "random seed")->capture_default_str();

  // synth
  cli::SynthCommand syn;
  std::string syn_format = "matrix-market";
  auto* sy = app.add_subcommand("synth", "sample a dataset with Barabasi-Albert ground truth");
  sy->add_option("-o,--out", syn.output_dir, "output directory")->required();
  sy->add_option("--lengths", syn.lengths, "axis lengths")->delimiter(',')->capture_default_str();
  sy->add_option("--axes", syn.axis_names, "axis names")->delimiter(',');
  sy->add_option("--attach", syn.attachment, "edges added per new vertex")->capture_default_str();
  sy->add_option("--delta", syn.delta, "diagonal regularization")->capture_default_str();
  sy->add_option("--replicates", syn.replicates, "independent tensors to draw")->capture_default_str();
  sy->add_option("--format", syn_format, "file format")
      ->check(CLI::IsMember({"matrix-market", "dense-csv", "coo-tsv"}))
      ->capture_default_str();
  sy->add_option("--seed", syn.seed, "random seed")->capture_default_str();

  // bench
  cli::BenchCommand bench;
  bool bench_no_points = false;
  auto* be = app.add_subcommand("bench", "precision-recall sweep over seeds and ranks");
  be->add_option("-o,--out", bench.output_dir, "output directory")->required();
  be->add_option("--lengths", bench.lengths, "axis lengths")->delimiter(',')->capture_default_str();
  be->add_option("--fractions", bench.fractions, "k as fractions of each axis length")
      ->delimiter(',')
      ->capture_default_str();
  be->add_option("--seeds", bench.seeds, "number of seeds")->capture_default_str();
  be->add_option("--first-seed", bench.first_seed, "first seed")->capture_default_str();
  be->add_option("--attach", bench.attachment, "edges added per new vertex")->capture_default_str();
  be->add_option("--delta", bench.delta, "diagonal regularization")->capture_default_str();
  be->add_option("--replicates", bench.replicates, "independent tensors per seed")
      ->capture_default_str();
  be->add_flag("--nonparanormal", bench.nonparanormal, "rank-transform the samples first");
  be->add_flag("--no-points", bench_no_points, "skip the per-threshold PR table");

  // oracle
  cli::OracleCommand oracle;
  auto* orc = app.add_subcommand("oracle", "dense direct maximum likelihood (small data only)");
  orc->add_option("-m,--manifest", oracle.manifest, "dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
  orc->add_option("-o,--out", oracle.output_dir, "output directory")->required();
  orc->add_option("--tol", oracle.gradient_tolerance, "gradient tolerance")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (est->parsed()) {
      config.threads = threads;
      config.components = cli::parse_components(components);
      for (const std::string& item : axis_components) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw DomainError("--axis-components expects AXIS=VALUE, got '" + item + "'");
        }
        config.axis_components[item.substr(0, eq)] = cli::parse_components(item.substr(eq + 1));
      }
      config.nonparanormal = !raw;
      config.threshold = parse_threshold_kind(threshold);
      if (!hypothesis.empty()) {
        config.hypothesis = hypothesis == "unit-variance" ? HypothesisMode::unit_variance
                                                          : HypothesisMode::per_axis_standardized;
      }
      config.metric = metric == "diagonal" ? StepMetric::diagonal : StepMetric::identity;
      return cli::run_estimate_command(config);
    }
    if (sp->parsed()) {
      spec.components = cli::parse_components(spec_components);
      spec.nonparanormal = !spec_raw;
      return cli::run_spectrum_command(spec);
    }
    if (sy->parsed()) {
      syn.format = parse_format(syn_format);
      return cli::run_synth_command(syn);
    }
    if (be->parsed()) {
      bench.write_points = !bench_no_points;
      return cli::run_bench_command(bench);
    }
    if (orc->parsed()) return cli::run_oracle_command(oracle);
  } catch (const StageError& e) {
    std::cerr << "error in " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
