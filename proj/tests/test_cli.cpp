#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace edmq;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::cli_main(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("edmq_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST(SamplesCsv, ParsesCommentsAndBlankLines) {
  std::istringstream in("# x,y\n1.5, -2\n\n  3e-1,4  \r\n");
  const auto s = read_samples_csv(in, 2);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0][0], 1.5);
  EXPECT_EQ(s[0][1], -2.0);
  EXPECT_EQ(s[1][0], 0.3);
  EXPECT_EQ(s[1][1], 4.0);
}

TEST(SamplesCsv, RejectsMalformedRows) {
  for (const char* text : {"1,2,3\n", "1\n", "1,abc\n", "1,,2\n", "x\n"}) {
    std::istringstream in(text);
    try {
      read_samples_csv(in, 2);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::malformed_file);
      EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
    }
  }
}

TEST(SamplesCsv, WriteReadRoundTripIsExact) {
  const auto s = sample(DistributionSpec::standard(DistributionKind::laplace, 3), 500, 4);
  std::stringstream buf;
  write_samples_csv(buf, s);
  EXPECT_EQ(read_samples_csv(buf, 3), s);
}

TEST(RateCsv, HeaderAndRow) {
  std::ostringstream out;
  write_rate_csv(out, {RateRow{100, 0, 3, 0.5, 0.75, 0.25}});
  EXPECT_EQ(out.str(), "n,trial,iterations,D_hat,D_best,loss\n100,0,3,0.5,0.75,0.25\n");
}

TEST_F(CliTest, DesignMatchesLibrary) {
  const auto rdp = path("rule.rdp"), summary = path("summary.json");
  const auto r = invoke({"design", "--dist-p", "gaussian", "--dist-q", "laplace", "--d", "1", "--J", "6", "--L", "8",
                      "--box", "-5", "5", "--seed", "1", "--n", "100000", "--out", rdp, "--summary", summary});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(summary));
  EXPECT_GT(j["divergence"].get<double>(), 0.0);
  EXPECT_GT(j["population_divergence"].get<double>(), 0.0);

  // the same pipeline through the library
  const auto g = GridSpec::cube(1, 6, -5, 5);
  const auto xs = sample(DistributionSpec::standard(DistributionKind::gaussian, 1), 100000, derive_seed(1, {0}));
  const auto ys = sample(DistributionSpec::standard(DistributionKind::laplace, 1), 100000, derive_seed(1, {1}));
  const auto bp = bin_samples(g, xs), bq = bin_samples(g, ys);
  FGConfig cfg;
  cfg.levels = 8;
  cfg.seed = 1;
  const auto want = run(g, kt_probabilities(g, bp.counts, bp.n_kept), kt_probabilities(g, bq.counts, bq.n_kept), cfg);
  EXPECT_EQ(j["divergence"].get<double>(), want.divergence);
  const auto tree = deserialize_rdp(read_binary_file(rdp));
  EXPECT_EQ(to_labeling(tree, g), want.rule.labels);
}

TEST_F(CliTest, DesignFromCsvFiles) {
  std::ostringstream p, q;
  write_samples_csv(p, sample(DistributionSpec::standard(DistributionKind::gaussian, 2), 3000, 1));
  write_samples_csv(q, sample(DistributionSpec::standard(DistributionKind::laplace, 2), 2000, 2));
  spit(path("p.csv"), "# header\n" + p.str());
  spit(path("q.csv"), q.str());
  const auto r = invoke({"design", "--samples-p", path("p.csv"), "--samples-q", path("q.csv"), "--d", "2", "--J", "3",
                      "--L", "3", "--out", path("r.rdp")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LE(j["n_p"].get<int>(), 3000);
  EXPECT_GT(j["n_p"].get<int>(), 2990);
  EXPECT_FALSE(j.contains("population_divergence"));
  EXPECT_TRUE(fs::exists(path("r.rdp")));
}

TEST_F(CliTest, MalformedCsvLeavesNoOutput) {
  spit(path("p.csv"), "0.1\n0.2\nnope\n");
  spit(path("q.csv"), "0.1\n");
  const auto r = invoke({"design", "--samples-p", path("p.csv"), "--samples-q", path("q.csv"), "--out", path("r.rdp"),
                      "--summary", path("s.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("r.rdp")));
  EXPECT_FALSE(fs::exists(path("s.json")));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"design", "--out", path("x"), "--L", "zero"}).code, 1);
  EXPECT_EQ(invoke({"design", "--out", path("x")}).code, 1);  // no input given
  EXPECT_EQ(invoke({"rate-experiment", "--dist-p", "gaussian"}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
  EXPECT_FALSE(fs::exists(path("x")));
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(invoke({"best-in-class", "--dist-p", "cauchy", "--dist-q", "laplace"}).code, 2);
  EXPECT_EQ(invoke({"rdp-import", "--rdp", path("missing.rdp")}).code, 2);
  EXPECT_EQ(invoke({"best-in-class", "--dist-p", "gaussian", "--dist-q", "laplace", "--box", "5", "-5"}).code, 2);
}

TEST_F(CliTest, RateExperimentShape) {
  const auto r = invoke({"rate-experiment", "--dist-p", "gaussian", "--dist-q", "laplace", "--J", "4", "--L", "4",
                      "--n", "100", "--trials", "1", "--out", path("rate.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(path("rate.csv")));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], rate_csv_header);
  EXPECT_EQ(lines[1].rfind("100,0,", 0), 0u);
}

TEST_F(CliTest, RateExperimentIsDeterministic) {
  std::vector<std::string> base{"rate-experiment", "--dist-p", "gaussian", "--dist-q", "laplace", "--J", "5",
                                "--L", "4", "--n", "100", "1000", "--trials", "4", "--seed", "3"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", path("a.csv")});
  b.insert(b.end(), {"--out", path("b.csv"), "--threads", "8"});
  ASSERT_EQ(invoke(a).code, 0);
  ASSERT_EQ(invoke(b).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  const auto stdout_run = invoke(base);
  EXPECT_EQ(stdout_run.out, slurp(path("a.csv")));
}

TEST_F(CliTest, ConfigFileMirrorsFlags) {
  spit(path("exp.cfg"),
       "# rate study\ndist-p = gaussian\ndist-q = laplace  # unit variance\nJ = 5\nL = 4\nn = 100 1000\n"
       "trials = 4\nseed = 3\n");
  const auto from_cfg = invoke({"rate-experiment", "--config", path("exp.cfg")});
  const auto from_flags = invoke({"rate-experiment", "--dist-p", "gaussian", "--dist-q", "laplace", "--J", "5", "--L",
                               "4", "--n", "100", "1000", "--trials", "4", "--seed", "3"});
  ASSERT_EQ(from_cfg.code, 0) << from_cfg.err;
  EXPECT_EQ(from_cfg.out, from_flags.out);
  // flags on the command line override the file
  const auto override_ = invoke({"rate-experiment", "--config", path("exp.cfg"), "--trials", "1"});
  ASSERT_EQ(override_.code, 0) << override_.err;
  EXPECT_EQ(std::count(override_.out.begin(), override_.out.end(), '\n'), 3);
}

TEST_F(CliTest, RdpExportImportRoundTrip) {
  spit(path("labels.txt"), "0\n0\n1\n1\n");
  ASSERT_EQ(invoke({"rdp-export", "--J", "2", "--L", "2", "--labels", path("labels.txt"), "--out", path("t.rdp")}).code,
            0);
  const std::string want{'R', 'D', 'P', '1', 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  EXPECT_EQ(slurp(path("t.rdp")), want);
  const auto r = invoke({"rdp-import", "--rdp", path("t.rdp")});
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  EXPECT_EQ(read_labels(in), (Labeling{0, 0, 1, 1}));
}

TEST_F(CliTest, RdpExportRejectsWrongLength) {
  spit(path("labels.txt"), "0\n1\n1\n");
  const auto r = invoke({"rdp-export", "--J", "2", "--L", "2", "--labels", path("labels.txt"), "--out", path("t.rdp")});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(path("t.rdp")));
}

TEST_F(CliTest, QuantizeConstantTree) {
  std::string constant;
  for (int i = 0; i < 16; ++i) constant += "2\n";
  spit(path("labels.txt"), constant);
  ASSERT_EQ(invoke({"rdp-export", "--d", "2", "--J", "2", "--L", "3", "--labels", path("labels.txt"), "--out",
                 path("c.rdp")})
                .code,
            0);
  std::ostringstream pts;
  write_samples_csv(pts, sample(DistributionSpec::standard(DistributionKind::gaussian, 2), 50, 8));
  spit(path("x.csv"), pts.str());
  const auto r = invoke({"quantize", "--rdp", path("c.rdp"), "--samples", path("x.csv"), "--out", path("q.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(path("q.csv")));
  const auto labels = read_labels(in);
  ASSERT_EQ(labels.size(), 50u);
  for (Label l : labels) EXPECT_EQ(l, 2u);
}

TEST_F(CliTest, QuantizeMarksOutsidePoints) {
  spit(path("labels.txt"), "0\n1\n");
  ASSERT_EQ(invoke({"rdp-export", "--J", "1", "--L", "2", "--labels", path("labels.txt"), "--out", path("t.rdp")}).code,
            0);
  spit(path("x.csv"), "-1\n1\n9\n");
  const auto r = invoke({"quantize", "--rdp", path("t.rdp"), "--samples", path("x.csv")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "# label\n0\n1\noutside\n");
}

TEST_F(CliTest, BestInClassReportsApproximationError) {
  const auto r = invoke({"best-in-class", "--dist-p", "gaussian", "--dist-q", "laplace", "--J", "6", "--L", "8",
                      "--candidates", "2000", "--out", path("b.rdp")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  FGConfig cfg;
  cfg.levels = 8;
  const auto g = GridSpec::cube(1, 6, -5, 5);
  const auto want = best_in_class(DistributionSpec::standard(DistributionKind::gaussian, 1),
                                  DistributionSpec::standard(DistributionKind::laplace, 1), g, cfg);
  EXPECT_EQ(j["divergence"].get<double>(), want.divergence);
  EXPECT_GT(j["approximation_error"].get<double>(), 0.0);
  EXPECT_EQ(to_labeling(deserialize_rdp(read_binary_file(path("b.rdp"))), g), want.rule.labels);
}
