#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "fleetmx/cli.hpp"
#include "fleetmx/cp.hpp"
#include "fleetmx/error.hpp"
#include "fleetmx/seqmodel.hpp"

using namespace fleetmx;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fleetmx_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void synth() {
    const Result r = run({"synth", "--demo", "--out", dir_.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  std::vector<std::string> data_flags() const {
    return {"--vehicles", path("vehicles.csv"), "--maintenance", path("maintenance.csv")};
  }
  std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) const {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  }

  fs::path dir_;
};

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {}, {"bogus"}, {"parafac", "--no-such-flag"}, {"parafac", "--rank", "abc"}, {"report"}}) {
    const Result r = run(args);
    EXPECT_EQ(r.code, 2) << (args.empty() ? "" : args[0]);
    EXPECT_TRUE(starts_with(r.err, "error: usage: ")) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  }
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"train", "--help"}).code, 0);
}

TEST_F(CliTest, ModuleErrorsCarryCategoryAndExitCode) {
  Result r = run({"tensorize", "--vehicles", path("missing.csv"), "--maintenance", path("m.csv"), "--out", path("t")});
  EXPECT_EQ(r.code, exit_code(ErrorCategory::kIo));
  EXPECT_TRUE(starts_with(r.err, "error: io: ")) << r.err;

  std::ofstream(path("bad.txt")) << "not a tensor\n";
  r = run({"parafac", "--tensor", path("bad.txt"), "--out", path("m.txt")});
  EXPECT_EQ(r.code, exit_code(ErrorCategory::kParse));
  EXPECT_TRUE(starts_with(r.err, "error: parse: ")) << r.err;

  synth();
  r = run(with({"tensorize", "--out", path("t.txt"), "--window-start", "2013-01", "--window-end", "2016-12"},
               data_flags()));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"parafac", "--tensor", path("t.txt"), "--out", path("m.txt"), "--rank", "0"});
  EXPECT_EQ(r.code, exit_code(ErrorCategory::kInvalidArgument));
  EXPECT_TRUE(starts_with(r.err, "error: invalid_argument: ")) << r.err;

  r = run(with({"tensorize", "--out", path("t2.txt"), "--time-mode", "lifetime", "--granularity", "month"},
               data_flags()));
  EXPECT_NE(r.code, 0);
  r = run(with({"seqmine", "--target", "NO SUCH CAR"}, data_flags()));
  EXPECT_EQ(r.code, exit_code(ErrorCategory::kData));
  r = run(with({"tensorize", "--out", path("t3.txt"), "--window-start", "2013-1"}, data_flags()));
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
}

TEST_F(CliTest, TensorizeParafacReportChain) {
  synth();
  ASSERT_TRUE(fs::exists(path("manifest.json")));
  Result r = run(with({"tensorize", "--out", path("t.txt"), "--window-start", "2013-01", "--window-end", "2016-12"},
                      data_flags()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("60 x 12 x 48"), std::string::npos) << r.out;

  r = run({"parafac", "--tensor", path("t.txt"), "--out", path("m1.txt"), "--rank", "3", "--report-dir",
           path("rep"), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("rep/component_01.csv")));
  EXPECT_TRUE(fs::exists(path("rep/factors.csv")));
  EXPECT_FALSE(fs::exists(path("rep/component_01.svg")));
  const cp::CpModel m = cp::load_model(path("m1.txt"));
  EXPECT_EQ(m.rank(), 3u);
  EXPECT_EQ(m.labels[1].size(), 12u);

  ASSERT_EQ(run({"parafac", "--tensor", path("t.txt"), "--out", path("m2.txt"), "--rank", "3"}).code, 0);
  EXPECT_EQ(slurp(path("m1.txt")), slurp(path("m2.txt")));
  ASSERT_EQ(run({"parafac", "--tensor", path("t.txt"), "--out", path("m3.txt"), "--rank", "3", "--seed", "5"}).code,
            0);
  EXPECT_NE(slurp(path("m1.txt")), slurp(path("m3.txt")));

  r = run({"report", "--model", path("m1.txt"), "--out", path("rep2"), "--format", "svg"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("rep2/component_03.svg")));
  EXPECT_EQ(slurp(path("rep2/component_01.svg")).rfind("<svg", 0), 0u);
}

TEST_F(CliTest, ConfigFileOverridesFlags) {
  synth();
  ASSERT_EQ(run(with({"tensorize", "--out", path("t.txt"), "--window-start", "2013-01"}, data_flags())).code, 0);
  std::ofstream(path("run.cfg")) << "# overrides\nrank = 2\nmax_iters = 7\n";
  const Result r = run({"parafac", "--tensor", path("t.txt"), "--out", path("m.txt"), "--rank", "4", "--config",
                        path("run.cfg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const cp::CpModel m = cp::load_model(path("m.txt"));
  EXPECT_EQ(m.rank(), 2u);
  EXPECT_LE(m.iterations, 7);

  std::ofstream(path("bad.cfg")) << "no-such-option = 1\n";
  EXPECT_EQ(run({"parafac", "--tensor", path("t.txt"), "--out", path("m.txt"), "--config", path("bad.cfg")}).code,
            2);
}

TEST_F(CliTest, SeqmineTableToStdoutAndFile) {
  synth();
  Result r = run(with({"seqmine", "--target", "DODGE CHARGER", "--bonferroni"}, data_flags()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(starts_with(r.out, "pattern,left_support,left_norm,right_support,right_norm,i_ratio,z,p,p_bonferroni\n"))
      << r.out;
  EXPECT_NE(r.out.find("\"(ELECTRICAL, LIGHTING, BODY)\""), std::string::npos) << r.out;
  r = run(with({"seqmine", "--out", path("s.csv"), "--top-n", "3"}, data_flags()));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string table = slurp(path("s.csv"));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
}

TEST_F(CliTest, TrainEvalPredict) {
  synth();
  const std::vector<std::string> small = {"--embed-dim", "8", "--hidden-dim", "8", "--layers", "1", "--epochs", "2"};
  Result r = run(with(with({"train", "--out", path("lstm.bin")}, data_flags()), small));
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(path("lstm.bin.split.json")));
  const auto model = seqmodel::load_model(path("lstm.bin"));
  EXPECT_EQ(model.config.hidden_dim, 8);
  EXPECT_EQ(model.valid_history.size(), 2u);

  r = run(with({"eval", "--model", path("lstm.bin"), "--split", path("lstm.bin.split.json")}, data_flags()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("test perplexity: "), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("unigram baseline: "), std::string::npos) << r.out;

  r = run(with({"predict", "--model", path("lstm.bin"), "--prefix", "BRAKES;ENGINE", "--top-k", "3"}, data_flags()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(starts_with(r.out, "rank,label,probability\n1,")) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);

  r = run(with({"predict", "--model", path("lstm.bin"), "--unit", "10001"}, data_flags()));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run(with({"predict", "--model", path("lstm.bin"), "--unit", "nope"}, data_flags()));
  EXPECT_NE(r.code, 0);

  ASSERT_EQ(run(with(with({"train", "--out", path("again.bin")}, data_flags()), small)).code, 0);
  EXPECT_EQ(slurp(path("lstm.bin")), slurp(path("again.bin")));
}

TEST_F(CliTest, SynthDoesNotTouchInputsAndIsReproducible) {
  const std::string spec = path("spec.json");
  ASSERT_EQ(run({"synth", "--demo", "--out", path("a")}).code, 0);
  fs::copy_file(path("a/spec.json"), spec);
  const std::string before = slurp(spec);
  ASSERT_EQ(run({"synth", "--spec", spec, "--out", path("b")}).code, 0);
  EXPECT_EQ(slurp(spec), before);
  EXPECT_EQ(slurp(path("a/maintenance.csv")), slurp(path("b/maintenance.csv")));
  EXPECT_EQ(slurp(path("a/manifest.json")), slurp(path("b/manifest.json")));
}

TEST(CliBinary, ExitStatusReachesTheShell) {
  const std::string bin = FLEETMX_CLI_PATH;
  int status = std::system((bin + " --help > /dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  status = std::system((bin + " parafac --tensor /nonexistent/t.txt --out /tmp/x 2> /dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), exit_code(ErrorCategory::kIo));
}
