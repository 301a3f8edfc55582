#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ksgraph/dataset.hpp"
#include "ksgraph/recompose.hpp"
#include "ksgraph/spectrum.hpp"

namespace ksgraph {

enum class FileFormat { matrix_market, dense_csv, coo_tsv };

// Accepts "matrix-market", "dense-csv" and "coo-tsv".
FileFormat parse_format(const std::string& name);
std::string format_name(FileFormat format);

struct ManifestModality {
  std::string name;
  std::vector<std::string> axes;
  std::filesystem::path path;
  FileFormat format = FileFormat::matrix_market;
};

struct Manifest {
  std::filesystem::path source;
  std::vector<ManifestModality> modalities;
  // Optional per-axis files: one label per line, and true edges as
  // 1-based "i<TAB>j" lines.
  std::map<std::string, std::filesystem::path> axis_labels;
  std::map<std::string, std::filesystem::path> ground_truth;
};

// Relative paths inside the manifest are resolved against its directory.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

Dataset ingest(const Manifest& manifest);

// Readers raise IngestError naming the file and line. `order` is the
// expected tensor order for COO-TSV files.
SparseTensor read_matrix_market(const std::filesystem::path& path);
SparseTensor read_dense_csv(const std::filesystem::path& path);
SparseTensor read_coo_tsv(const std::filesystem::path& path, std::size_t order);
SparseTensor read_tensor(const std::filesystem::path& path, FileFormat format, std::size_t order);

void write_matrix_market(const SparseTensor& tensor, const std::filesystem::path& path);
void write_dense_csv(const SparseTensor& tensor, const std::filesystem::path& path);
// "# shape d1 d2 ..." header, then sorted 1-based coordinates and values.
void write_coo_tsv(const SparseTensor& tensor, const std::filesystem::path& path);
void write_tensor(const SparseTensor& tensor, const std::filesystem::path& path, FileFormat format);

std::vector<std::string> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<std::string>& labels, const std::filesystem::path& path);
// Returned pairs are 0-based with i < j.
std::vector<std::pair<Index, Index>> read_edge_set(const std::filesystem::path& path);
void write_edge_set(const std::vector<std::pair<Index, Index>>& edges,
                    const std::filesystem::path& path);

// Columns: axis, i, j, weight, z, p_raw, p_bonferroni. Indices are 1-based;
// statistics columns are "nan" when the graph carries none.
void write_edges_tsv(const FactorGraph& graph, const std::filesystem::path& path);
// Columns: component, eigenvalue, variance_fraction, cumulative.
void write_scree_csv(const std::vector<ScreeRow>& scree, const std::filesystem::path& path);

// 17 significant digits.
std::string format_double(double value);

}  // namespace ksgraph
