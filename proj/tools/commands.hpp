#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ksgraph/io.hpp"
#include "ksgraph/pipeline.hpp"

namespace ksgraph::cli {

struct SpectrumCommand {
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  std::vector<std::string> axes;  // empty: every axis
  ComponentChoice components = ComponentChoice::explained(0.9);
  Index max_components = 256;
  bool nonparanormal = true;
  TieMethod ties = TieMethod::average;
  std::uint64_t seed = 0;
};

struct SynthCommand {
  std::filesystem::path output_dir;
  std::vector<Index> lengths{250, 250};
  std::vector<std::string> axis_names;  // default axis1, axis2, ...
  Index attachment = 1;
  double delta = 0.1;
  Index replicates = 1;
  std::uint64_t seed = 0;
  FileFormat format = FileFormat::matrix_market;
};

struct BenchCommand {
  std::filesystem::path output_dir;
  std::vector<Index> lengths{250, 250};
  std::vector<double> fractions{1.0, 0.5, 0.25};
  int seeds = 10;
  std::uint64_t first_seed = 0;
  Index attachment = 1;
  double delta = 0.1;
  Index replicates = 1;
  bool nonparanormal = false;
  bool write_points = true;
};

struct OracleCommand {
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  double gradient_tolerance = 1e-9;
};

// Parses "0.9" as a variance target and "50" as a component count.
ComponentChoice parse_components(const std::string& text);

int run_estimate_command(const RunConfig& config);
int run_spectrum_command(const SpectrumCommand& cmd);
int run_synth_command(const SynthCommand& cmd);
int run_bench_command(const BenchCommand& cmd);
int run_oracle_command(const OracleCommand& cmd);

}  // namespace ksgraph::cli
