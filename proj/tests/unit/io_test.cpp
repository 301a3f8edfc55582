#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "ksgraph/error.hpp"
#include "ksgraph/io.hpp"
#include "test_util.hpp"

namespace ksgraph {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("ksgraph_io_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path file(const std::string& name) const { return dir_ / name; }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name)) << text;
    return file(name);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  // Expects an IngestError whose message starts with "<path>:<line>:".
  template <typename Fn>
  void expect_located(Fn&& fn, const fs::path& p, int line) {
    try {
      fn();
      FAIL() << "expected an IngestError";
    } catch (const IngestError& e) {
      const std::string prefix = p.string() + ":" + std::to_string(line) + ":";
      EXPECT_EQ(std::string(e.what()).rfind(prefix, 0), 0u) << e.what();
    }
  }

  fs::path dir_;
};

TEST_F(IoTest, CooTsvRoundTripIsByteExact) {
  std::mt19937_64 rng(1);
  const SparseTensor t = testing::random_tensor({4, 3, 5}, 0.3, rng);
  write_coo_tsv(t, file("a.tsv"));
  const SparseTensor back = read_coo_tsv(file("a.tsv"), 3);
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_EQ(back.coordinates(), t.coordinates());
  EXPECT_EQ(back.values(), t.values());
  write_coo_tsv(back, file("b.tsv"));
  EXPECT_EQ(slurp(file("a.tsv")), slurp(file("b.tsv")));
  EXPECT_EQ(slurp(file("a.tsv")).rfind("# shape 4 3 5\n", 0), 0u);
}

TEST_F(IoTest, CooTsvShapeInferredWithoutHeader) {
  const fs::path p = write("c.tsv", "1\t2\t0.5\n3 1 -2\n");
  const SparseTensor t = read_coo_tsv(p, 2);
  EXPECT_EQ(t.shape(), (std::vector<Index>{3, 2}));
  EXPECT_EQ(t.nnz(), 2);
}

TEST_F(IoTest, CooTsvErrorsNameFileAndLine) {
  const fs::path p = write("bad.tsv", "# shape 2 2\n1\t1\t1.0\n1\t3\t2.0\n");
  expect_located([&] { read_coo_tsv(p, 2); }, p, 3);
  const fs::path q = write("bad2.tsv", "1\t1\t1.0\n0\t1\t2.0\n");
  expect_located([&] { read_coo_tsv(q, 2); }, q, 2);
  const fs::path r = write("bad3.tsv", "1\t1\tabc\n");
  expect_located([&] { read_coo_tsv(r, 2); }, r, 1);
  const fs::path s = write("bad4.tsv", "1\t1\t2\t1.0\n");
  expect_located([&] { read_coo_tsv(s, 2); }, s, 1);
}

TEST_F(IoTest, MatrixMarketRoundTrip) {
  std::mt19937_64 rng(2);
  const SparseTensor t = testing::random_tensor({6, 4}, 0.5, rng);
  write_matrix_market(t, file("m.mtx"));
  const SparseTensor back = read_matrix_market(file("m.mtx"));
  EXPECT_EQ(back.to_dense(), t.to_dense());
  EXPECT_THROW(write_matrix_market(testing::random_tensor({2, 2, 2}, 1.0, rng), file("x.mtx")),
               IngestError);
}

TEST_F(IoTest, MatrixMarketVariants) {
  const fs::path sym = write("s.mtx",
                             "%%MatrixMarket matrix coordinate integer symmetric\n"
                             "% comment\n3 3 2\n2 1 5\n3 3 7\n");
  EXPECT_EQ(read_matrix_market(sym).to_dense(),
            (std::vector<double>{0, 5, 0, 5, 0, 0, 0, 0, 7}));
  const fs::path pat = write("p.mtx", "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 2\n");
  EXPECT_EQ(read_matrix_market(pat).to_dense(), (std::vector<double>{0, 1, 0, 0}));
  const fs::path arr = write("a.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
  EXPECT_EQ(read_matrix_market(arr).to_dense(), (std::vector<double>{1, 3, 2, 4}));
}

TEST_F(IoTest, MatrixMarketErrors) {
  const fs::path banner = write("b.mtx", "%%NotMatrixMarket\n1 1 0\n");
  expect_located([&] { read_matrix_market(banner); }, banner, 1);
  const fs::path count = write("c.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n2 2 1\n");
  expect_located([&] { read_matrix_market(count); }, count, 4);
  const fs::path range = write("r.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
  expect_located([&] { read_matrix_market(range); }, range, 3);
  const fs::path nan = write("n.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 nan\n");
  EXPECT_THROW(read_matrix_market(nan), IngestError);
}

TEST_F(IoTest, DenseCsv) {
  const fs::path p = write("d.csv", "# a comment\n1,0,2\n0,0,-3\n");
  const SparseTensor t = read_dense_csv(p);
  EXPECT_EQ(t.shape(), (std::vector<Index>{2, 3}));
  EXPECT_EQ(t.nnz(), 3);
  write_dense_csv(t, file("e.csv"));
  EXPECT_EQ(read_dense_csv(file("e.csv")).to_dense(), t.to_dense());
  const fs::path ragged = write("r.csv", "1,2\n3\n");
  expect_located([&] { read_dense_csv(ragged); }, ragged, 2);
}

TEST_F(IoTest, ReadTensorChecksOrder) {
  std::mt19937_64 rng(3);
  write_coo_tsv(testing::random_tensor({2, 3}, 1.0, rng), file("t.tsv"));
  EXPECT_NO_THROW(read_tensor(file("t.tsv"), FileFormat::coo_tsv, 2));
  write_matrix_market(testing::random_tensor({2, 3}, 1.0, rng), file("t.mtx"));
  EXPECT_THROW(read_tensor(file("t.mtx"), FileFormat::matrix_market, 3), IngestError);
  EXPECT_THROW(read_tensor(file("missing.mtx"), FileFormat::matrix_market, 2), IngestError);
}

TEST_F(IoTest, FormatNames) {
  for (FileFormat f : {FileFormat::matrix_market, FileFormat::dense_csv, FileFormat::coo_tsv}) {
    EXPECT_EQ(parse_format(format_name(f)), f);
  }
  EXPECT_THROW(parse_format("parquet"), IngestError);
}

TEST_F(IoTest, ManifestRoundTripAndIngest) {
  std::mt19937_64 rng(4);
  fs::create_directories(file("data"));
  write_matrix_market(testing::random_tensor({5, 4}, 0.6, rng), file("data/rna.mtx"));
  write_coo_tsv(testing::random_tensor({5, 3}, 0.6, rng), file("data/atac.tsv"));
  write_labels({"c1", "c2", "c3", "c4", "c5"}, file("data/cells.txt"));
  write_edge_set({{0, 1}, {2, 4}}, file("data/truth.tsv"));
  Manifest m;
  m.modalities.push_back({"rna", {"cell", "gene"}, file("data/rna.mtx"), FileFormat::matrix_market});
  m.modalities.push_back({"atac", {"cell", "peak"}, file("data/atac.tsv"), FileFormat::coo_tsv});
  m.axis_labels["cell"] = file("data/cells.txt");
  m.ground_truth["cell"] = file("data/truth.tsv");
  save_manifest(m, file("manifest.json"));
  EXPECT_EQ(slurp(file("manifest.json")).find(dir_.string()), std::string::npos);

  const Manifest back = load_manifest(file("manifest.json"));
  ASSERT_EQ(back.modalities.size(), 2u);
  EXPECT_TRUE(fs::equivalent(back.modalities[1].path, file("data/atac.tsv")));
  EXPECT_EQ(back.modalities[1].format, FileFormat::coo_tsv);
  const Dataset data = ingest(back);
  EXPECT_EQ(data.axes().size(), 3u);
  EXPECT_EQ(data.axis("cell").length, 5);
  EXPECT_EQ(read_labels(back.axis_labels.at("cell")).size(), 5u);
  EXPECT_EQ(read_edge_set(back.ground_truth.at("cell")),
            (std::vector<std::pair<Index, Index>>{{0, 1}, {2, 4}}));

  Manifest wrong = back;
  wrong.ground_truth["protein"] = file("data/truth.tsv");
  EXPECT_THROW(ingest(wrong), IngestError);
}

TEST_F(IoTest, ManifestErrors) {
  const fs::path bad = write("bad.json", "{ not json");
  EXPECT_THROW(load_manifest(bad), IngestError);
  const fs::path empty = write("empty.json", "{\"modalities\": []}");
  EXPECT_THROW(load_manifest(empty), IngestError);
  const fs::path missing = write("missing.json", "{\"modalities\": [{\"name\": \"x\"}]}");
  EXPECT_THROW(load_manifest(missing), IngestError);
  // Conflicting lengths of a shared axis surface as an ingest error.
  std::mt19937_64 rng(5);
  write_matrix_market(testing::random_tensor({5, 4}, 0.6, rng), file("a.mtx"));
  write_matrix_market(testing::random_tensor({6, 4}, 0.6, rng), file("b.mtx"));
  const fs::path conflict = write(
      "conflict.json",
      R"({"modalities": [{"name": "a", "axes": ["x", "y"], "path": "a.mtx"},
                         {"name": "b", "axes": ["x", "z"], "path": "b.mtx"}]})");
  EXPECT_THROW(ingest(load_manifest(conflict)), IngestError);
}

TEST_F(IoTest, EdgeSets) {
  const fs::path p = write("e.tsv", "# truth\n3\t1\n1\t3\n2 4\n");
  EXPECT_EQ(read_edge_set(p), (std::vector<std::pair<Index, Index>>{{0, 2}, {1, 3}}));
  const fs::path loop = write("l.tsv", "2\t2\n");
  expect_located([&] { read_edge_set(loop); }, loop, 1);
}

TEST_F(IoTest, EdgesAndScreeTables) {
  FactorGraph g;
  g.axis = Axis{"gene", 4};
  g.edges = {{0, 3, -0.25}};
  g.degree = {1, 0, 0, 1};
  write_edges_tsv(g, file("edges.tsv"));
  EXPECT_EQ(slurp(file("edges.tsv")),
            "axis\ti\tj\tweight\tz\tp_raw\tp_bonferroni\ngene\t1\t4\t-0.25\tnan\tnan\tnan\n");
  g.statistics = {{-2.0, 0.5, 1.0}};
  write_edges_tsv(g, file("edges2.tsv"));
  EXPECT_NE(slurp(file("edges2.tsv")).find("gene\t1\t4\t-0.25\t-2\t0.5\t1\n"), std::string::npos);

  write_scree_csv({{1, 3.0, 0.75, 0.75}, {2, 1.0, 0.25, 1.0}}, file("scree.csv"));
  EXPECT_EQ(slurp(file("scree.csv")),
            "component,eigenvalue,variance_fraction,cumulative\n1,3,0.75,0.75\n2,1,0.25,1\n");
}

TEST(FormatDouble, RoundTripsExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

}  // namespace
}  // namespace ksgraph
