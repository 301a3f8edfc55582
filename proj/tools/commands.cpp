#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "ksgraph/identify.hpp"
#include "ksgraph/synth.hpp"

namespace ksgraph::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

ComponentChoice parse_components(const std::string& text) {
  const bool fractional = text.find_first_of(".eE") != std::string::npos;
  std::size_t used = 0;
  if (fractional) {
    const double v = std::stod(text, &used);
    if (used != text.size() || !(v > 0.0 && v <= 1.0)) {
      throw DomainError("variance target '" + text + "' must lie in (0, 1]");
    }
    return ComponentChoice::explained(v);
  }
  const long long k = std::stoll(text, &used);
  if (used != text.size() || k < 1) throw DomainError("component count '" + text + "' must be >= 1");
  return ComponentChoice::fixed(k);
}

int run_estimate_command(const RunConfig& config) {
  const EstimateResult r = run_estimate(config);
  for (const AxisResult& a : r.axes) {
    std::cout << a.graph.axis.name << ": d=" << a.graph.axis.length << " k=" << a.spectrum.k
              << " explained=" << format_double(a.spectrum.explained_variance_ratio)
              << " edges=" << a.graph.edges.size() << " rule=" << a.rule << '\n';
  }
  for (const PrSummary& p : r.pr) {
    std::cout << p.axis << ": precision=" << format_double(p.precision)
              << " recall=" << format_double(p.recall);
    if (p.auprc) std::cout << " auprc=" << format_double(*p.auprc);
    std::cout << '\n';
  }
  for (const std::string& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "total " << format_double(r.timings.total) << " s; outputs in "
            << config.output_dir.string() << '\n';
  return 0;
}

int run_spectrum_command(const SpectrumCommand& cmd) {
  const Dataset data = ingest(load_manifest(cmd.manifest));
  std::vector<std::string> axes = cmd.axes;
  if (axes.empty()) {
    for (const Axis& a : data.axes()) axes.push_back(a.name);
  }
  fs::create_directories(cmd.output_dir);
  json doc = json::array();
  std::vector<std::string> warnings;
  for (const std::string& name : axes) {
    const std::size_t l = data.axis_index(name);
    const auto op = axis_operator(data, l, cmd.nonparanormal, cmd.ties);
    const AxisSpectrum s = choose_spectrum(*op, data.axes()[l], cmd.components, cmd.max_components,
                                           cmd.seed + l, SpectrumOptions{}, &warnings);
    write_scree_csv(spectrum_report(s, s.gram_trace), cmd.output_dir / ("scree_" + name + ".csv"));
    doc.push_back({{"axis", name},
                   {"length", s.axis.length},
                   {"k", s.k},
                   {"explained_variance", s.explained_variance_ratio},
                   {"gram_trace", s.gram_trace},
                   {"iterations", s.iterations},
                   {"max_relative_residual", s.max_relative_residual}});
    std::cout << name << ": k=" << s.k << " explained=" << format_double(s.explained_variance_ratio)
              << '\n';
  }
  std::ofstream(cmd.output_dir / "spectrum.json") << doc.dump(2) << '\n';
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int run_synth_command(const SynthCommand& cmd) {
  const GroundTruth truth =
      generate_ground_truth(cmd.lengths, cmd.axis_names, cmd.attachment, cmd.delta, cmd.seed);
  const Dataset data = sample_ks_normal(truth.dense_factors(), truth.axis_names, cmd.replicates,
                                        cmd.seed ^ 0x5DEECE66DULL, "sample");
  FileFormat format = cmd.format;
  if (truth.axis_names.size() != 2 && format != FileFormat::coo_tsv) format = FileFormat::coo_tsv;
  const std::string ext = format == FileFormat::matrix_market ? ".mtx"
                          : format == FileFormat::dense_csv   ? ".csv"
                                                              : ".tsv";
  fs::create_directories(cmd.output_dir);
  Manifest manifest;
  for (const Modality& m : data.modalities()) {
    const fs::path path = cmd.output_dir / (m.name() + ext);
    write_tensor(m.tensor(), path, format);
    manifest.modalities.push_back(ManifestModality{m.name(), m.axes(), path, format});
  }
  for (std::size_t l = 0; l < truth.axis_names.size(); ++l) {
    const std::string& name = truth.axis_names[l];
    const fs::path edges = cmd.output_dir / ("truth_" + name + ".tsv");
    write_edge_set(truth.factors[l].edges, edges);
    manifest.ground_truth[name] = edges;
    const Eigen::SparseMatrix<double> f = truth.factors[l].factor;
    std::vector<Index> coords;
    std::vector<double> values;
    for (int c = 0; c < f.outerSize(); ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(f, c); it; ++it) {
        coords.push_back(it.row());
        coords.push_back(it.col());
        values.push_back(it.value());
      }
    }
    write_matrix_market(SparseTensor({f.rows(), f.cols()}, coords, values),
                        cmd.output_dir / ("factor_" + name + ".mtx"));
  }
  save_manifest(manifest, cmd.output_dir / "manifest.json");
  std::cout << "wrote " << data.modalities().size() << " modality file(s) and manifest to "
            << cmd.output_dir.string() << '\n';
  return 0;
}

int run_bench_command(const BenchCommand& cmd) {
  fs::create_directories(cmd.output_dir);
  std::ofstream auprc(cmd.output_dir / "auprc.csv");
  std::ofstream runtime(cmd.output_dir / "runtime.csv");
  std::ofstream points;
  auprc << "seed,axis,fraction,k,auprc,baseline\n";
  runtime << "seed,fraction,stage,seconds\n";
  if (cmd.write_points) {
    points.open(cmd.output_dir / "pr_points.csv");
    points << "seed,axis,fraction,k,threshold,precision,recall\n";
  }
  for (int s = 0; s < cmd.seeds; ++s) {
    const std::uint64_t seed = cmd.first_seed + static_cast<std::uint64_t>(s);
    const GroundTruth truth =
        generate_ground_truth(cmd.lengths, {}, cmd.attachment, cmd.delta, seed);
    const Dataset data = sample_ks_normal(truth.dense_factors(), truth.axis_names, cmd.replicates,
                                          seed ^ 0x5DEECE66DULL, "sample");
    const ModalityStructure structure = build_structure(data);
    for (double fraction : cmd.fractions) {
      RunConfig config;
      config.nonparanormal = cmd.nonparanormal;
      config.threshold = ThresholdKind::top_overall;
      config.seed = seed;
      for (std::size_t l = 0; l < structure.axis_count(); ++l) {
        const Index d = structure.axis_length[l];
        const Index n = structure.samples[l];
        const Index k = std::clamp<Index>(std::llround(fraction * static_cast<double>(d)), 1,
                                          std::min(d, n));
        config.axis_components[structure.axis_name[l]] = ComponentChoice::fixed(k);
      }
      const EstimateResult r = estimate(data, config);
      runtime << seed << ',' << fraction << ",eigenvectors," << format_double(r.timings.eigenvectors)
              << '\n'
              << seed << ',' << fraction << ",eigenvalues," << format_double(r.timings.eigenvalues)
              << '\n'
              << seed << ',' << fraction << ",recomposition,"
              << format_double(r.timings.recomposition) << '\n';
      for (std::size_t l = 0; l < r.axes.size(); ++l) {
        const AxisResult& a = r.axes[l];
        std::vector<Edge> all;
        for_each_off_diagonal(a.spectrum.eigenvectors, a.lambda,
                              [&](Index i, Index j, double w) { all.push_back(Edge{i, j, w}); });
        const PrCurve curve = pr_curve(all, truth.factors[l].edges);
        const double d = static_cast<double>(a.graph.axis.length);
        const double baseline =
            static_cast<double>(truth.factors[l].edges.size()) / (d * (d - 1.0) / 2.0);
        auprc << seed << ',' << a.graph.axis.name << ',' << fraction << ',' << a.spectrum.k << ','
              << format_double(curve.auprc) << ',' << format_double(baseline) << '\n';
        if (cmd.write_points) {
          for (const PrPoint& p : curve.points) {
            points << seed << ',' << a.graph.axis.name << ',' << fraction << ',' << a.spectrum.k
                   << ',' << format_double(p.threshold) << ',' << format_double(p.precision) << ','
                   << format_double(p.recall) << '\n';
          }
        }
        std::cout << "seed " << seed << " axis " << a.graph.axis.name << " k=" << a.spectrum.k
                  << " auprc=" << format_double(curve.auprc) << '\n';
      }
    }
  }
  return 0;
}

int run_oracle_command(const OracleCommand& cmd) {
  const Dataset data = ingest(load_manifest(cmd.manifest));
  const ModalityStructure structure = build_structure(data);
  OracleOptions options;
  options.gradient_tolerance = cmd.gradient_tolerance;
  const OracleResult r = dense_oracle_mle(data, structure, options);
  fs::create_directories(cmd.output_dir);

  const TraceStructure trace = build_trace_structure(structure);
  const NullHypothesis h = NullHypothesis::unit_variance(structure);
  bool testable = true;
  try {
    check_hypothesis(h, structure, trace);
  } catch (const HypothesisError&) {
    testable = false;
  }
  const Index n_tests = bonferroni_test_count(structure);
  for (std::size_t l = 0; l < structure.axis_count(); ++l) {
    FactorGraph g;
    g.axis = data.axes()[l];
    g.degree.assign(static_cast<std::size_t>(g.axis.length), 0);
    const Eigen::MatrixXd& f = r.factors[l];
    for (Index i = 0; i < f.rows(); ++i) {
      for (Index j = i + 1; j < f.cols(); ++j) {
        if (f(i, j) == 0.0) continue;
        g.edges.push_back(Edge{i, j, f(i, j)});
        ++g.degree[static_cast<std::size_t>(i)];
        ++g.degree[static_cast<std::size_t>(j)];
      }
    }
    if (testable) attach_statistics(g, l, structure, h, n_tests);
    write_edges_tsv(g, cmd.output_dir / ("edges_" + g.axis.name + ".tsv"));
  }
  json doc = {{"nll", r.nll}, {"gradient_norm", r.gradient_norm}, {"iterations", r.iterations}};
  std::ofstream(cmd.output_dir / "oracle.json") << doc.dump(2) << '\n';
  std::cout << "oracle converged in " << r.iterations << " iterations; gradient "
            << format_double(r.gradient_norm) << '\n';
  return 0;
}

}  // namespace ksgraph::cli
