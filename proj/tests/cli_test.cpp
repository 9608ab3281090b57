#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("soforest_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  void write_file(const std::string& p, const std::string& content) const {
    std::ofstream out(p, std::ios::binary);
    out << content;
  }

  CliResult run(const std::string& args) const {
    const std::string out_path = path("run_stdout.txt");
    const std::string err_path = path("run_stderr.txt");
    const std::string cmd =
        std::string(SOFOREST_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
  }

  static std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
  }

  fs::path dir_;
};

TEST_F(CliTest, GenTrainPredictRoundTrip) {
  const CliResult gen =
      run("gen-data --out " + path("d.csv") + " --samples 800 --features 6 --seed 3");
  ASSERT_EQ(gen.code, 0) << gen.err;
  EXPECT_NE(gen.out.find("wrote "), std::string::npos);
  EXPECT_NE(gen.out.find("800 samples, 6 features"), std::string::npos);

  const CliResult train =
      run("train --data " + path("d.csv") +
          " --trees 10 --mode dynamic --breakeven 200 --seed 1 --out " + path("m.bin"));
  ASSERT_EQ(train.code, 0) << train.err;
  EXPECT_NE(train.out.find("trained 10 trees"), std::string::npos) << train.out;
  EXPECT_NE(train.out.find("mode=dynamic"), std::string::npos) << train.out;
  EXPECT_NE(train.out.find("breakeven=200"), std::string::npos) << train.out;

  const CliResult predict = run("predict --data " + path("d.csv") + " --model " + path("m.bin") +
                                " --out " + path("p.csv"));
  ASSERT_EQ(predict.code, 0) << predict.err;
  EXPECT_NE(predict.err.find("accuracy "), std::string::npos) << predict.err;
  EXPECT_NE(predict.err.find("(800 samples)"), std::string::npos) << predict.err;

  const std::vector<std::string> lines = lines_of(slurp(path("p.csv")));
  ASSERT_EQ(lines.size(), 801u);
  EXPECT_EQ(lines[0], "prediction,vote_0,vote_1");
  for (std::size_t i = 1; i < lines.size(); ++i)
    EXPECT_TRUE(lines[i].rfind("0,", 0) == 0 || lines[i].rfind("1,", 0) == 0)
        << "line " << i << ": " << lines[i];
}

TEST_F(CliTest, PredictionsAreByteIdenticalAcrossRuns) {
  ASSERT_EQ(run("gen-data --out " + path("d.csv") + " --samples 300 --features 4").code, 0);
  ASSERT_EQ(run("train --data " + path("d.csv") +
                " --trees 5 --mode dynamic --breakeven 128 --out " + path("m.bin"))
                .code,
            0);
  ASSERT_EQ(run("predict --data " + path("d.csv") + " --model " + path("m.bin") + " --out " +
                path("p1.csv"))
                .code,
            0);
  ASSERT_EQ(run("predict --data " + path("d.csv") + " --model " + path("m.bin") + " --out " +
                path("p2.csv"))
                .code,
            0);
  EXPECT_EQ(slurp(path("p1.csv")), slurp(path("p2.csv")));
}

TEST_F(CliTest, RetrainingWithTheSameSeedGivesTheSameModelFile) {
  ASSERT_EQ(run("gen-data --out " + path("d.csv") + " --samples 400 --features 5").code, 0);
  const std::string train_args = "train --data " + path("d.csv") +
                                 " --trees 6 --mode dynamic --breakeven 150 --seed 9 --out ";
  ASSERT_EQ(run(train_args + path("m1.bin")).code, 0);
  ASSERT_EQ(run(train_args + path("m2.bin")).code, 0);
  EXPECT_EQ(slurp(path("m1.bin")), slurp(path("m2.bin")));
}

TEST_F(CliTest, NonDynamicSummaryOmitsBreakeven) {
  ASSERT_EQ(run("gen-data --out " + path("d.csv") + " --samples 200 --features 4").code, 0);
  const CliResult train =
      run("train --data " + path("d.csv") + " --trees 3 --mode exact --out " + path("m.bin"));
  ASSERT_EQ(train.code, 0) << train.err;
  EXPECT_NE(train.out.find("mode=exact"), std::string::npos) << train.out;
  EXPECT_EQ(train.out.find("breakeven="), std::string::npos) << train.out;
}

TEST_F(CliTest, OddBinCountWarnsAboutScalarFallback) {
  ASSERT_EQ(run("gen-data --out " + path("d.csv") + " --samples 200 --features 4").code, 0);
  const CliResult train = run("train --data " + path("d.csv") +
                              " --trees 2 --mode histogram --bins 32 --out " + path("m.bin"));
  ASSERT_EQ(train.code, 0) << train.err;
  EXPECT_NE(train.err.find("two-level binning supports 64 or 256 bins"), std::string::npos)
      << train.err;

  const CliResult quiet = run("train --data " + path("d.csv") +
                              " --trees 2 --mode histogram --bins 32 --scalar-binning --out " +
                              path("m.bin"));
  ASSERT_EQ(quiet.code, 0) << quiet.err;
  EXPECT_EQ(quiet.err.find("two-level binning"), std::string::npos) << quiet.err;
}

TEST_F(CliTest, CalibrateReportsBreakevenAndWritesTimings) {
  const CliResult cal = run(
      "calibrate --budget-ms 30 --n-min 64 --n-max 4096 --reps 3 --seed 2 --out " + path("c.csv"));
  ASSERT_EQ(cal.code, 0) << cal.err;
  ASSERT_EQ(cal.out.rfind("breakeven ", 0), 0u) << cal.out;
  const std::size_t value = std::stoull(cal.out.substr(10));
  EXPECT_GE(value, 2u);

  const std::vector<std::string> lines = lines_of(slurp(path("c.csv")));
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines[0], "n,exact_seconds,histogram_seconds");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::size_t n = 0;
    double ex = 0.0, hist = 0.0;
    ASSERT_EQ(std::sscanf(lines[i].c_str(), "%zu,%lf,%lf", &n, &ex, &hist), 3) << lines[i];
    EXPECT_GT(n, 0u);
    EXPECT_GT(ex, 0.0);
    EXPECT_GT(hist, 0.0);
  }
}

TEST_F(CliTest, CalibrateMarksFallbackWhenBudgetIsHopeless) {
  const CliResult cal = run("calibrate --budget-ms 0.0001 --reps 1");
  ASSERT_EQ(cal.code, 0) << cal.err;
  EXPECT_NE(cal.out.find("(fallback)"), std::string::npos) << cal.out;
}

TEST_F(CliTest, BenchProfilesEmitTheirCsvSchemas) {
  const std::string common =
      " --synthetic --samples 400 --gen-features 5 --trees 2 --breakeven 200 --out ";

  const CliResult mode = run("bench --profile mode" + common + path("mode.csv"));
  ASSERT_EQ(mode.code, 0) << mode.err;
  std::vector<std::string> lines = lines_of(slurp(path("mode.csv")));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "mode,seconds,normalized");
  EXPECT_EQ(lines[1].rfind("exact,", 0), 0u);
  EXPECT_EQ(lines[4].rfind("dynamic_two_level,", 0), 0u);

  const CliResult depth = run("bench --profile depth" + common + path("depth.csv"));
  ASSERT_EQ(depth.code, 0) << depth.err;
  lines = lines_of(slurp(path("depth.csv")));
  ASSERT_GE(lines.size(), 4u);
  EXPECT_EQ(lines[0], "depth,mode,seconds,nodes,samples");
  EXPECT_EQ(lines[1].rfind("0,exact,", 0), 0u);

  const CliResult phase = run("bench --profile phase" + common + path("phase.csv"));
  ASSERT_EQ(phase.code, 0) << phase.err;
  lines = lines_of(slurp(path("phase.csv")));
  ASSERT_EQ(lines.size(), 17u);
  EXPECT_EQ(lines[0], "phase,depth_bucket,seconds");
  EXPECT_EQ(lines[1].rfind("sample_projections,0-4,", 0), 0u);
  EXPECT_EQ(lines[16].rfind("evaluate_splits,15+,", 0), 0u);
}

TEST_F(CliTest, LibsvmInputTrainsAndPredicts) {
  write_file(path("d.svm"),
             "1 1:0.5 3:1.0\n"
             "0 2:-0.5\n"
             "1 1:0.9 2:0.1\n"
             "0 3:-1.2\n"
             "1 1:0.7\n"
             "0 1:-0.8 3:0.2\n");
  const CliResult train = run("train --data " + path("d.svm") +
                              " --format libsvm --features 3 --trees 3 --mode exact --out " +
                              path("m.bin"));
  ASSERT_EQ(train.code, 0) << train.err;

  const CliResult predict = run("predict --data " + path("d.svm") +
                                " --format libsvm --features 3 --model " + path("m.bin"));
  ASSERT_EQ(predict.code, 0) << predict.err;
  const std::vector<std::string> out_lines = lines_of(predict.out);
  ASSERT_EQ(out_lines.size(), 7u);
  EXPECT_EQ(out_lines[0], "prediction,vote_1,vote_0");
  EXPECT_NE(predict.err.find("(6 samples)"), std::string::npos) << predict.err;

  const CliResult missing =
      run("train --data " + path("d.svm") + " --format libsvm --trees 2 --out " + path("x.bin"));
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("--features is required"), std::string::npos) << missing.err;
}

TEST_F(CliTest, CsvLabelColumnByNameOrIndex) {
  write_file(path("d.csv"),
             "a,y,b\n"
             "1.0,0,5.0\n"
             "2.0,1,6.0\n"
             "3.0,0,7.0\n"
             "4.0,1,8.0\n"
             "1.5,0,5.5\n"
             "2.5,1,6.5\n");
  const std::string base = "train --data " + path("d.csv") + " --trees 2 --mode exact --seed 4";
  ASSERT_EQ(run(base + " --label y --out " + path("by_name.bin")).code, 0);
  ASSERT_EQ(run(base + " --label 1 --out " + path("by_index.bin")).code, 0);
  EXPECT_EQ(slurp(path("by_name.bin")), slurp(path("by_index.bin")));

  const CliResult bad = run(base + " --label missing --out " + path("x.bin"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.err.rfind("error: ", 0), 0u) << bad.err;
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  ASSERT_EQ(run("gen-data --out " + path("d.csv") + " --samples 50 --features 3").code, 0);
  EXPECT_EQ(run("train --data " + path("d.csv")).code, 2);            // missing --out
  EXPECT_EQ(run("nonsense").code, 2);                                 // unknown subcommand
  EXPECT_EQ(run("train --data " + path("d.csv") + " --mode sideways --out " + path("m.bin")).code,
            2);
  EXPECT_EQ(run("").code, 2);  // a subcommand is required
}

TEST_F(CliTest, RuntimeErrorsExitWithOneAndReport) {
  const CliResult train =
      run("train --data " + path("absent.csv") + " --trees 2 --out " + path("m.bin"));
  EXPECT_EQ(train.code, 1);
  EXPECT_EQ(train.err.rfind("error: ", 0), 0u) << train.err;

  const CliResult bench = run("bench --profile mode");
  EXPECT_EQ(bench.code, 1);
  EXPECT_NE(bench.err.find("bench needs --data or --synthetic"), std::string::npos) << bench.err;

  const CliResult gen = run("gen-data --out " + path("g.csv") + " --samples 1");
  EXPECT_EQ(gen.code, 1);
  EXPECT_EQ(gen.err.rfind("error: ", 0), 0u) << gen.err;

  const CliResult predict =
      run("predict --data " + path("d.csv") + " --model " + path("no_model.bin"));
  EXPECT_EQ(predict.code, 1);
  EXPECT_NE(predict.err.find("error: "), std::string::npos) << predict.err;
}

}  // namespace
