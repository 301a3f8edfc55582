#include "ksgraph/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ksgraph/error.hpp"

namespace ksgraph {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const fs::path& path, Index line, const std::string& what) {
  std::ostringstream msg;
  msg << path.string();
  if (line > 0) msg << ':' << line;
  msg << ": " << what;
  throw IngestError(msg.str());
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, 0, "cannot open file");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IngestError(path.string() + ": cannot open for writing");
  return out;
}

// Splits on any run of the given delimiters; empty fields are skipped.
std::vector<std::string_view> split(std::string_view line, std::string_view delims) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const std::size_t start = line.find_first_not_of(delims, pos);
    if (start == std::string_view::npos) break;
    const std::size_t end = line.find_first_of(delims, start);
    out.push_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos
                                                                    : end - start));
    pos = end == std::string_view::npos ? line.size() : end;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_value(std::string_view field, const fs::path& path, Index line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    fail(path, line, "cannot parse number '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) fail(path, line, "value is not finite");
  return v;
}

Index parse_index(std::string_view field, const fs::path& path, Index line) {
  field = trim(field);
  Index v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    fail(path, line, "cannot parse integer '" + std::string(field) + "'");
  }
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

SparseTensor assemble(const fs::path& path, std::vector<Index> shape, std::vector<Index> coords,
                      std::vector<double> values) {
  try {
    return SparseTensor(std::move(shape), std::move(coords), std::move(values));
  } catch (const Error& e) {
    fail(path, 0, e.what());
  }
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

FileFormat parse_format(const std::string& name) {
  if (name == "matrix-market") return FileFormat::matrix_market;
  if (name == "dense-csv") return FileFormat::dense_csv;
  if (name == "coo-tsv") return FileFormat::coo_tsv;
  throw IngestError("unknown file format '" + name +
                    "' (expected matrix-market, dense-csv or coo-tsv)");
}

std::string format_name(FileFormat format) {
  switch (format) {
    case FileFormat::matrix_market:
      return "matrix-market";
    case FileFormat::dense_csv:
      return "dense-csv";
    case FileFormat::coo_tsv:
      return "coo-tsv";
  }
  return "unknown";
}

SparseTensor read_matrix_market(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  Index lineno = 0;
  if (!std::getline(in, line)) fail(path, 1, "empty file");
  ++lineno;
  const std::string header = lower(line);
  const auto banner = split(header, " \t\r");
  if (banner.size() < 5 || banner[0] != "%%matrixmarket" || banner[1] != "matrix") {
    fail(path, lineno, "missing '%%MatrixMarket matrix' banner");
  }
  const std::string layout(banner[2]);
  const std::string field(banner[3]);
  const std::string symmetry(banner[4]);
  if (layout != "coordinate" && layout != "array") fail(path, lineno, "unsupported layout " + layout);
  if (field != "real" && field != "integer" && field != "double" && field != "pattern") {
    fail(path, lineno, "unsupported field " + field);
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    fail(path, lineno, "unsupported symmetry " + symmetry);
  }
  const bool pattern = field == "pattern";
  const bool symmetric = symmetry == "symmetric";
  if (layout == "array" && pattern) fail(path, lineno, "pattern arrays are not valid");

  std::vector<std::string_view> size_fields;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '%') continue;
    size_fields = split(t, " \t");
    break;
  }
  const std::size_t expected = layout == "coordinate" ? 3 : 2;
  if (size_fields.size() != expected) fail(path, lineno, "malformed size line");
  const Index rows = parse_index(size_fields[0], path, lineno);
  const Index cols = parse_index(size_fields[1], path, lineno);
  if (rows < 1 || cols < 1) fail(path, lineno, "dimensions must be positive");
  const Index declared =
      layout == "coordinate" ? parse_index(size_fields[2], path, lineno) : rows * cols;
  if (declared < 0) fail(path, lineno, "negative entry count");
  if (symmetric && rows != cols) fail(path, lineno, "symmetric matrix must be square");

  std::vector<Index> coords;
  std::vector<double> values;
  coords.reserve(static_cast<std::size_t>(2 * declared));
  values.reserve(static_cast<std::size_t>(declared));
  Index seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '%') continue;
    const auto f = split(t, " \t");
    Index r = 0;
    Index c = 0;
    double v = 1.0;
    if (layout == "coordinate") {
      if (f.size() != (pattern ? 2u : 3u)) fail(path, lineno, "wrong number of fields");
      r = parse_index(f[0], path, lineno);
      c = parse_index(f[1], path, lineno);
      if (!pattern) v = parse_value(f[2], path, lineno);
      if (r < 1 || r > rows || c < 1 || c > cols) fail(path, lineno, "index out of range");
    } else {
      if (f.size() != 1) fail(path, lineno, "wrong number of fields");
      if (seen >= declared) fail(path, lineno, "more entries than declared");
      r = seen % rows + 1;  // column-major
      c = seen / rows + 1;
      v = parse_value(f[0], path, lineno);
    }
    ++seen;
    if (seen > declared) fail(path, lineno, "more entries than declared");
    if (v == 0.0) continue;
    coords.push_back(r - 1);
    coords.push_back(c - 1);
    values.push_back(v);
    if (symmetric && r != c) {
      coords.push_back(c - 1);
      coords.push_back(r - 1);
      values.push_back(v);
    }
  }
  if (seen != declared) {
    fail(path, lineno, "expected " + std::to_string(declared) + " entries, found " +
                           std::to_string(seen));
  }
  return assemble(path, {rows, cols}, std::move(coords), std::move(values));
}

SparseTensor read_dense_csv(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  Index lineno = 0;
  Index rows = 0;
  Index cols = -1;
  std::vector<Index> coords;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = t.find(',', pos);
      f.push_back(t.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                 : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (cols < 0) cols = static_cast<Index>(f.size());
    if (static_cast<Index>(f.size()) != cols) {
      fail(path, lineno, "row has " + std::to_string(f.size()) + " fields, expected " +
                             std::to_string(cols));
    }
    for (Index c = 0; c < cols; ++c) {
      const double v = parse_value(f[static_cast<std::size_t>(c)], path, lineno);
      if (v == 0.0) continue;
      coords.push_back(rows);
      coords.push_back(c);
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) fail(path, lineno, "no data rows");
  return assemble(path, {rows, cols}, std::move(coords), std::move(values));
}

SparseTensor read_coo_tsv(const fs::path& path, std::size_t order) {
  if (order < 1) throw IngestError(path.string() + ": tensor order must be positive");
  std::ifstream in = open_input(path);
  std::string line;
  Index lineno = 0;
  std::vector<Index> shape;
  std::vector<Index> extent(order, 0);
  std::vector<Index> coords;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto f = split(t.substr(1), " \t");
      if (!f.empty() && f[0] == "shape") {
        if (f.size() != order + 1) fail(path, lineno, "shape header does not match the axis count");
        shape.clear();
        for (std::size_t a = 0; a < order; ++a) {
          const Index d = parse_index(f[a + 1], path, lineno);
          if (d < 1) fail(path, lineno, "axis lengths must be positive");
          shape.push_back(d);
        }
      }
      continue;
    }
    const auto f = split(t, " \t");
    if (f.size() != order + 1) {
      fail(path, lineno, "expected " + std::to_string(order) + " indices and a value");
    }
    for (std::size_t a = 0; a < order; ++a) {
      const Index i = parse_index(f[a], path, lineno);
      if (i < 1) fail(path, lineno, "indices are 1-based");
      if (!shape.empty() && i > shape[a]) fail(path, lineno, "index exceeds declared shape");
      extent[a] = std::max(extent[a], i);
      coords.push_back(i - 1);
    }
    values.push_back(parse_value(f[order], path, lineno));
  }
  if (shape.empty()) {
    if (values.empty()) fail(path, lineno, "no entries and no shape header");
    shape = extent;
  }
  return assemble(path, std::move(shape), std::move(coords), std::move(values));
}

SparseTensor read_tensor(const fs::path& path, FileFormat format, std::size_t order) {
  SparseTensor t;
  switch (format) {
    case FileFormat::matrix_market:
      t = read_matrix_market(path);
      break;
    case FileFormat::dense_csv:
      t = read_dense_csv(path);
      break;
    case FileFormat::coo_tsv:
      t = read_coo_tsv(path, order);
      break;
  }
  if (t.order() != order) {
    throw IngestError(path.string() + ": file holds an order-" + std::to_string(t.order()) +
                      " tensor but " + std::to_string(order) + " axes were listed");
  }
  return t;
}

void write_matrix_market(const SparseTensor& tensor, const fs::path& path) {
  if (tensor.order() != 2) throw IngestError("matrix-market output needs an order-2 tensor");
  std::ofstream out = open_output(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << tensor.shape()[0] << ' ' << tensor.shape()[1] << ' ' << tensor.nnz() << '\n';
  for (Index e = 0; e < tensor.nnz(); ++e) {
    const auto c = tensor.coordinate(e);
    out << c[0] + 1 << ' ' << c[1] + 1 << ' ' << format_double(tensor.value(e)) << '\n';
  }
}

void write_dense_csv(const SparseTensor& tensor, const fs::path& path) {
  if (tensor.order() != 2) throw IngestError("dense-csv output needs an order-2 tensor");
  const std::vector<double> dense = tensor.to_dense();
  std::ofstream out = open_output(path);
  const Index rows = tensor.shape()[0];
  const Index cols = tensor.shape()[1];
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (c > 0) out << ',';
      out << format_double(dense[static_cast<std::size_t>(r * cols + c)]);
    }
    out << '\n';
  }
}

void write_coo_tsv(const SparseTensor& tensor, const fs::path& path) {
  std::ofstream out = open_output(path);
  out << "# shape";
  for (Index d : tensor.shape()) out << ' ' << d;
  out << '\n';
  for (Index e = 0; e < tensor.nnz(); ++e) {
    for (Index i : tensor.coordinate(e)) out << i + 1 << '\t';
    out << format_double(tensor.value(e)) << '\n';
  }
}

void write_tensor(const SparseTensor& tensor, const fs::path& path, FileFormat format) {
  switch (format) {
    case FileFormat::matrix_market:
      write_matrix_market(tensor, path);
      break;
    case FileFormat::dense_csv:
      write_dense_csv(tensor, path);
      break;
    case FileFormat::coo_tsv:
      write_coo_tsv(tensor, path);
      break;
  }
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path, 0, std::string("invalid JSON: ") + e.what());
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path candidate(p);
    return candidate.is_absolute() ? candidate : base / candidate;
  };
  Manifest m;
  m.source = path;
  try {
    if (!doc.contains("modalities") || !doc["modalities"].is_array() || doc["modalities"].empty()) {
      fail(path, 0, "manifest needs a nonempty 'modalities' array");
    }
    for (const json& entry : doc["modalities"]) {
      ManifestModality mod;
      mod.name = entry.at("name").get<std::string>();
      mod.axes = entry.at("axes").get<std::vector<std::string>>();
      mod.path = resolve(entry.at("path").get<std::string>());
      mod.format = entry.contains("format") ? parse_format(entry["format"].get<std::string>())
                                            : FileFormat::matrix_market;
      if (mod.axes.empty()) fail(path, 0, "modality '" + mod.name + "' lists no axes");
      m.modalities.push_back(std::move(mod));
    }
    for (const char* key : {"axis_labels", "ground_truth"}) {
      if (!doc.contains(key)) continue;
      auto& target = std::string(key) == "axis_labels" ? m.axis_labels : m.ground_truth;
      for (const auto& [axis, file] : doc[key].items()) {
        target[axis] = resolve(file.get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    fail(path, 0, std::string("malformed manifest: ") + e.what());
  } catch (const IngestError&) {
    throw;
  } catch (const Error& e) {
    fail(path, 0, e.what());
  }
  return m;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path();
  auto relative = [&](const fs::path& p) { return fs::relative(p, base.empty() ? "." : base).generic_string(); };
  json doc;
  doc["modalities"] = json::array();
  for (const ManifestModality& m : manifest.modalities) {
    doc["modalities"].push_back(
        {{"name", m.name}, {"axes", m.axes}, {"path", relative(m.path)}, {"format", format_name(m.format)}});
  }
  for (const auto& [axis, file] : manifest.axis_labels) doc["axis_labels"][axis] = relative(file);
  for (const auto& [axis, file] : manifest.ground_truth) doc["ground_truth"][axis] = relative(file);
  std::ofstream out = open_output(path);
  out << doc.dump(2) << '\n';
}

Dataset ingest(const Manifest& manifest) {
  std::vector<Modality> modalities;
  for (const ManifestModality& m : manifest.modalities) {
    SparseTensor t = read_tensor(m.path, m.format, m.axes.size());
    try {
      modalities.emplace_back(m.name, m.axes, std::move(t));
    } catch (const Error& e) {
      throw IngestError(m.path.string() + ": " + e.what());
    }
  }
  Dataset data;
  try {
    data = Dataset(std::move(modalities));
  } catch (const Error& e) {
    throw IngestError(manifest.source.string() + ": " + e.what());
  }
  for (const auto& extra : {manifest.axis_labels, manifest.ground_truth}) {
    for (const auto& [axis, file] : extra) {
      try {
        data.axis_index(axis);
      } catch (const Error&) {
        throw IngestError(manifest.source.string() + ": unknown axis '" + axis + "' referencing " +
                          file.string());
      }
    }
  }
  return data;
}

std::vector<std::string> read_labels(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    labels.push_back(line);
  }
  return labels;
}

void write_labels(const std::vector<std::string>& labels, const fs::path& path) {
  std::ofstream out = open_output(path);
  for (const std::string& l : labels) out << l << '\n';
}

std::vector<std::pair<Index, Index>> read_edge_set(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<std::pair<Index, Index>> edges;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = split(t, " \t");
    if (f.size() < 2) fail(path, lineno, "expected two vertex indices");
    const Index i = parse_index(f[0], path, lineno);
    const Index j = parse_index(f[1], path, lineno);
    if (i < 1 || j < 1) fail(path, lineno, "indices are 1-based");
    if (i == j) fail(path, lineno, "self loops are not edges");
    edges.emplace_back(std::min(i, j) - 1, std::max(i, j) - 1);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

void write_edge_set(const std::vector<std::pair<Index, Index>>& edges, const fs::path& path) {
  std::ofstream out = open_output(path);
  for (const auto& [i, j] : edges) out << i + 1 << '\t' << j + 1 << '\n';
}

void write_edges_tsv(const FactorGraph& graph, const fs::path& path) {
  std::ofstream out = open_output(path);
  out << "axis\ti\tj\tweight\tz\tp_raw\tp_bonferroni\n";
  const bool stats = graph.statistics.size() == graph.edges.size();
  const double nan = std::nan("");
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const Edge& ed = graph.edges[e];
    const EdgeStatistics s = stats ? graph.statistics[e] : EdgeStatistics{nan, nan, nan};
    out << graph.axis.name << '\t' << ed.i + 1 << '\t' << ed.j + 1 << '\t'
        << format_double(ed.weight) << '\t' << format_double(s.z) << '\t'
        << format_double(s.p_raw) << '\t' << format_double(s.p_bonferroni) << '\n';
  }
}

void write_scree_csv(const std::vector<ScreeRow>& scree, const fs::path& path) {
  std::ofstream out = open_output(path);
  out << "component,eigenvalue,variance_fraction,cumulative\n";
  for (const ScreeRow& r : scree) {
    out << r.component << ',' << format_double(r.eigenvalue) << ',' << format_double(r.fraction)
        << ',' << format_double(r.cumulative) << '\n';
  }
}

}  // namespace ksgraph
