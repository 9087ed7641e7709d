#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "sct/cli_io.hpp"
#include "test_support.hpp"

namespace sct {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("sct_cli_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::map<std::string, std::string> parse_doc(const std::string& text) {
  std::istringstream in(text);
  return KeyValueDocument::parse(in);
}

Errc parse_code(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_csv(in);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error for:\n" << text;
  return Errc::InvalidArgument;
}

GroupedDataset null_data(const std::vector<int>& sizes, int m, std::uint64_t seed, double lo = 0, double hi = 10) {
  std::mt19937_64 rng(seed);
  return testing::null_dataset(sizes, 1, m, rng, lo, hi);
}

TEST(Ingest, SingleGroupThreeRows) {
  std::istringstream in("group,x1,y1\nA,1,2\nA,2,3.5\nA,3,-1e-2\n");
  const GroupedDataset d = parse_csv(in);
  ASSERT_EQ(d.k(), 1);
  EXPECT_EQ(d.p, 1);
  EXPECT_EQ(d.m, 1);
  EXPECT_EQ(d.groups[0].X.rows(), 3);
  EXPECT_EQ(d.groups[0].X(2, 0), 1.0);
  EXPECT_EQ(d.groups[0].X(2, 1), 3.0);
  EXPECT_EQ(d.groups[0].Y(2, 0), -0.01);
}

TEST(Ingest, GroupsKeepFirstAppearanceOrder) {
  std::istringstream in("group,x1,y1,y2\nB,1,2,3\nA,2,3,4\nB,3,4,5\n\nA,4,5,6\n");
  const GroupedDataset d = parse_csv(in);
  ASSERT_EQ(d.k(), 2);
  EXPECT_EQ(d.groups[0].label, "B");
  EXPECT_EQ(d.groups[1].label, "A");
  EXPECT_EQ(d.groups[0].Y(1, 1), 5.0);
  EXPECT_EQ(d.groups[1].X(1, 1), 4.0);
}

TEST(Ingest, TwoResponseFileWithPublishedGroupSizes) {
  std::ostringstream out;
  write_csv(null_data({87, 161}, 2, 1, 0, 78.6), out);
  std::istringstream in(out.str());
  const FittedModels fit = fit_models(validate_dataset(parse_csv(in)));
  EXPECT_EQ(fit.k, 2);
  EXPECT_EQ(fit.p, 1);
  EXPECT_EQ(fit.m, 2);
  EXPECT_EQ(fit.nu, 244);
}

TEST(Ingest, BlankResponseCellReportsPosition) {
  std::istringstream in("group,x1,y1,y2\nA,1,2,3\nA,2,,4\n");
  try {
    parse_csv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonNumericCell);
    EXPECT_NE(std::string(e.what()).find("row 3, column 3"), std::string::npos) << e.what();
  }
  EXPECT_EQ(parse_code("group,x1,y1\nA,1,abc\n"), Errc::NonNumericCell);
  EXPECT_EQ(parse_code("group,x1,y1\nA,1\n"), Errc::NonNumericCell);
  EXPECT_EQ(parse_code("group,x1,y1\nA,1,2,3\n"), Errc::NonNumericCell);
}

TEST(Ingest, MalformedHeaders) {
  EXPECT_EQ(parse_code(""), Errc::MalformedHeader);
  EXPECT_EQ(parse_code("grp,x1,y1\nA,1,2\n"), Errc::MalformedHeader);
  EXPECT_EQ(parse_code("group,x2,y1\nA,1,2\n"), Errc::MalformedHeader);
  EXPECT_EQ(parse_code("group,x1\nA,1\n"), Errc::MalformedHeader);
  EXPECT_EQ(parse_code("group,y1,x1\nA,1,2\n"), Errc::MalformedHeader);
}

TEST(Ingest, EmptyGroups) {
  EXPECT_EQ(parse_code("group,x1,y1\n"), Errc::EmptyGroup);
  EXPECT_EQ(parse_code("group,x1,y1\n,1,2\n"), Errc::EmptyGroup);
}

TEST(Ingest, MissingFile) {
  try {
    ingest_csv("/nonexistent/sct/data.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code(e.code()), 2);
  }
}

TEST(Ingest, CsvRoundTripIsExact) {
  const GroupedDataset d = null_data({7, 9, 5}, 3, 2);
  std::ostringstream out;
  write_csv(d, out);
  std::istringstream in(out.str());
  const GroupedDataset back = parse_csv(in);
  ASSERT_EQ(back.k(), d.k());
  for (int g = 0; g < d.k(); ++g) {
    EXPECT_EQ(back.groups[g].label, d.groups[g].label);
    EXPECT_EQ(back.groups[g].X, d.groups[g].X);
    EXPECT_EQ(back.groups[g].Y, d.groups[g].Y);
  }
}

TEST(Config, BoxesAndFamilies) {
  const CovariateBox box = parse_box("0:78.6", 1);
  EXPECT_EQ(box.bounds[0].lower, 0.0);
  EXPECT_EQ(box.bounds[0].upper, 78.6);
  EXPECT_TRUE(parse_box("-inf:inf", 1).is_whole_space());
  EXPECT_EQ(parse_box("-1:2, 3:4", 2).bounds[1].upper, 4.0);
  EXPECT_THROW(parse_box("2:1", 1), Error);
  EXPECT_THROW(parse_box("0:1", 2), Error);
  EXPECT_THROW(parse_box("01", 1), Error);

  const GroupedDataset d = null_data({5, 5, 5}, 1, 3);
  EXPECT_EQ(parse_family("pairwise", d).pairs.size(), 3u);
  EXPECT_EQ(parse_family("successive", d).pairs.size(), 2u);
  EXPECT_EQ(parse_family("control:g2", d).pairs, (std::vector<Pair>{{1, 2}, {3, 2}}));
  EXPECT_THROW(parse_family("control:nope", d), Error);
  EXPECT_THROW(parse_family("everything", d), Error);

  EXPECT_EQ(parse_pair("2,1"), (Pair{2, 1}));
  EXPECT_THROW(parse_pair("2"), Error);

  RunConfig cfg;
  cfg.reps = 999;
  EXPECT_THROW(validate_config(cfg), Error);
  cfg.reps = 1000;
  cfg.alpha = 1.0;
  EXPECT_THROW(validate_config(cfg), Error);
}

TEST(Config, DefaultRangeIsObservedCovariateRange) {
  const GroupedDataset d = null_data({10, 10}, 1, 4);
  const CovariateBox box = config_box(RunConfig{}, d);
  double lo = 1e300, hi = -1e300;
  for (const auto& g : d.groups) lo = std::min(lo, g.X.col(1).minCoeff()), hi = std::max(hi, g.X.col(1).maxCoeff());
  EXPECT_EQ(box.bounds[0].lower, lo);
  EXPECT_EQ(box.bounds[0].upper, hi);
}

TEST(Format, SeventeenSignificantDigitsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Compare, RerunIsByteIdentical) {
  TempDir dir;
  const GroupedDataset d = null_data({20, 25, 15}, 2, 5);
  RunConfig cfg;
  cfg.reps = 2000;
  cfg.seed = 17;
  cfg.out = dir.file("a.txt");
  std::ostringstream human;
  run_compare(cfg, d, human);
  cfg.out = dir.file("b.txt");
  cfg.workers = 3;
  run_compare(cfg, d, human);
  EXPECT_EQ(slurp(dir.file("a.txt")), slurp(dir.file("b.txt")));
  EXPECT_FALSE(slurp(dir.file("a.txt")).empty());
}

TEST(Compare, ControlFamilyOnTwoGroups) {
  const GroupedDataset d = null_data({20, 25}, 2, 6);
  RunConfig cfg;
  cfg.reps = 2000;
  cfg.family = "control:g1";
  std::ostringstream human;
  const auto doc = parse_doc(run_compare(cfg, d, human).str());
  EXPECT_EQ(doc.at("family"), "vs_control");
  EXPECT_EQ(doc.at("family.size"), "1");
  EXPECT_EQ(doc.at("pair.1.i"), "2");
  EXPECT_EQ(doc.at("pair.1.j"), "1");
  EXPECT_EQ(doc.count("pair.2.i"), 0u);
}

TEST(Compare, HalfAlphaSmoke) {
  const GroupedDataset d = null_data({4, 5}, 2, 7);
  RunConfig cfg;
  cfg.reps = 1000;
  cfg.alpha = 0.5;
  cfg.grid = 11;
  std::ostringstream human;
  const auto doc = parse_doc(run_compare(cfg, d, human).str());
  for (const char* key : {"format", "k", "p", "m", "nu", "group.1.label", "group.2.n", "alpha", "reps", "seed",
                          "family", "range.1.lower", "range.1.upper", "critical.c_hat", "critical.rank",
                          "critical.order_stat_99.lower", "critical.order_stat_99.upper", "critical.eb_coverage.lower",
                          "critical.eb_coverage.upper", "pair.1.t", "pair.1.p_value", "pair.1.reject",
                          "pair.1.region.1.count", "pair.1.region.2.count", "pair.1.argmax.1"})
    EXPECT_EQ(doc.count(key), 1u) << key;
  EXPECT_EQ(doc.at("nu"), "5");
  EXPECT_EQ(doc.at("critical.rank"), "500");
  EXPECT_NE(human.str().find("critical constant"), std::string::npos);
}

struct TubeExport {
  std::vector<std::vector<double>> rows;
  std::map<std::string, std::string> meta;
};

TubeExport read_tube(const std::string& path) {
  TubeExport t;
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (auto cell : detail::split(line, ',')) row.push_back(std::stod(std::string(cell)));
    t.rows.push_back(row);
  }
  t.meta = parse_doc(slurp(path + ".meta"));
  return t;
}

TEST(Tube, ExportsGridOverRange) {
  TempDir dir;
  const GroupedDataset d = null_data({30, 40}, 2, 8, 0, 78.6);
  RunConfig cfg;
  cfg.reps = 2000;
  cfg.range = "0:78.6";
  cfg.out = dir.file("tube.csv");
  export_tube(cfg, d, std::nullopt);
  const TubeExport t = read_tube(cfg.out);
  ASSERT_EQ(t.rows.size(), 201u);
  EXPECT_EQ(t.rows.front()[0], 0.0);
  EXPECT_EQ(t.rows.back()[0], 78.6);
  EXPECT_EQ(t.rows.front().size(), 1u + 2u + 1u + 4u);
  EXPECT_EQ(slurp(cfg.out).substr(0, 62), "x,center_1,center_2,radius_sq,lower_1,upper_1,lower_2,upper_2\n");
}

TEST(Tube, EqualGroupsHaveZeroCenters) {
  TempDir dir;
  GroupedDataset d = null_data({15, 15}, 2, 9);
  d.groups[1].X = d.groups[0].X;
  d.groups[1].Y = d.groups[0].Y;
  RunConfig cfg;
  cfg.reps = 1000;
  cfg.grid = 21;
  cfg.out = dir.file("tube.csv");
  export_tube(cfg, d, std::nullopt);
  for (const auto& row : read_tube(cfg.out).rows) {
    EXPECT_EQ(row[1], 0.0);
    EXPECT_EQ(row[2], 0.0);
  }
}

TEST(Tube, ExportReconstructsCrossSections) {
  TempDir dir;
  const GroupedDataset d = null_data({20, 25}, 2, 10);
  RunConfig cfg;
  cfg.reps = 2000;
  cfg.grid = 31;
  cfg.range = "0:10";
  cfg.out = dir.file("tube.csv");
  export_tube(cfg, d, Pair{2, 1});
  const TubeExport t = read_tube(cfg.out);
  const FittedModels fit = fit_models(validate_dataset(d));
  const double c = std::stod(t.meta.at("tube.c"));
  Eigen::Matrix2d shape;
  for (int r = 0; r < 2; ++r)
    for (int col = 0; col < 2; ++col)
      shape(r, col) = std::stod(t.meta.at("tube.shape." + std::to_string(r + 1) + "." + std::to_string(col + 1)));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  int agreements = 0;
  for (const auto& row : t.rows) {
    const TubeCrossSection cs = cross_section(fit, {2, 1}, c, Eigen::VectorXd::Constant(1, row[0]));
    const Eigen::Vector2d center(row[1], row[2]);
    const double radius_sq = row[3];
    for (int s = 0; s < 50; ++s) {
      Eigen::Vector2d point = center;
      for (int l = 0; l < 2; ++l) point(l) += 1.5 * std::sqrt(radius_sq * shape(l, l)) * z(rng);
      const Eigen::Vector2d dev = point - center;
      const bool inside = dev.dot(shape.llt().solve(dev)) <= radius_sq;
      agreements += inside == cs.contains(point);
    }
    // Projected band columns match the exported shape.
    EXPECT_NEAR(row[5] - row[4], 2.0 * std::sqrt(radius_sq * shape(0, 0)), 1e-12 * (1 + row[5] - row[4]));
  }
  EXPECT_EQ(agreements, static_cast<int>(t.rows.size()) * 50);
}

TEST(Tube, ErrorPaths) {
  TempDir dir;
  RunConfig cfg;
  cfg.reps = 1000;
  cfg.out = dir.file("tube.csv");
  std::mt19937_64 rng(12);
  const GroupedDataset two_covariates = testing::null_dataset({10, 10}, 2, 1, rng);
  try {
    export_tube(cfg, two_covariates, std::nullopt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotUnivariate);
  }
  const GroupedDataset d = null_data({10, 10, 10}, 1, 13);
  cfg.range = "-inf:inf";
  EXPECT_THROW(export_tube(cfg, d, std::nullopt), Error);
  cfg.range = "";
  cfg.family = "successive";
  EXPECT_THROW(export_tube(cfg, d, Pair{1, 3}), Error);
  cfg.out = "";
  EXPECT_THROW(export_tube(cfg, d, std::nullopt), Error);
}

int run(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const std::string good = dir.file("good.csv");
  {
    std::ofstream f(good);
    write_csv(null_data({12, 14}, 2, 14), f);
  }
  std::string out, err;
  EXPECT_EQ(run({"fit", good}, &out), 0);
  EXPECT_NE(out.find("nu = 22"), std::string::npos);
  EXPECT_EQ(run({"critical", good, "--reps", "1000", "--range", "0:10"}, &out), 0);
  EXPECT_NE(out.find("critical.c_hat = "), std::string::npos);
  EXPECT_EQ(run({"pvalues", good, "--reps", "1000"}), 0);
  EXPECT_EQ(run({"roy", good, "--reps", "1000"}, &out), 0);
  EXPECT_NE(out.find("roy.critical = "), std::string::npos);
  EXPECT_EQ(run({"compare", good, "--reps", "1000", "--out", dir.file("report.txt")}), 0);
  EXPECT_NE(slurp(dir.file("report.txt")).find("pair.1.p_value"), std::string::npos);
  EXPECT_EQ(run({"tube", good, "--reps", "1000", "--out", dir.file("t.csv")}), 0);
  EXPECT_TRUE(fs::exists(dir.file("t.csv.meta")));

  // Input errors.
  const std::string bad = dir.file("bad.csv");
  write_file(bad, "group,x1,y1\nA,1,x\n");
  EXPECT_EQ(run({"fit", bad}, nullptr, &err), 2);
  EXPECT_NE(err.find("NonNumericCell"), std::string::npos);
  EXPECT_EQ(run({"fit", dir.file("missing.csv")}), 2);

  // Numerical degeneracy: responses fitted exactly.
  const std::string exact = dir.file("exact.csv");
  write_file(exact, "group,x1,y1\nA,1,2\nA,2,4\nA,3,6\nB,1,1\nB,2,2\nB,4,4\n");
  EXPECT_EQ(run({"compare", exact, "--reps", "1000"}, nullptr, &err), 3);
  EXPECT_NE(err.find("DegenerateScatter"), std::string::npos);

  // Configuration errors.
  EXPECT_EQ(run({"compare", good, "--alpha", "1.5"}), 4);
  EXPECT_EQ(run({"compare", good, "--reps", "10"}), 4);
  EXPECT_EQ(run({"compare", good, "--family", "control:zzz", "--reps", "1000"}), 4);
  EXPECT_EQ(run({"compare", good, "--bogus"}), 4);
  EXPECT_EQ(run({}), 4);
  EXPECT_EQ(run({"--help"}), 0);
}

}  // namespace
}  // namespace sct
