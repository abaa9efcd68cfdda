#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nkpp/config.hpp"
#include "nkpp/io.hpp"
#include "nkpp/runner.hpp"

using namespace nkpp;
namespace fs = std::filesystem;

namespace {

const char* kSpeedConfig = R"(kind = "speed"

[model]
kappa_plus = 2
m = 1
kappa_l = 1
kappa_nl = 0

[kernel_plus]
family = "laplace"
rate = 2
)";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nkpp_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  // Runs the CLI with `args`; stdout and stderr land in out_ / err_.
  int cli(const std::string& args) {
    const std::string cmd = std::string(NKPP_CLI_PATH) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int st = std::system(cmd.c_str());
    out_ = read_file(dir_ / "stdout");
    err_ = read_file(dir_ / "stderr");
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

  fs::path dir_;
  std::string out_, err_;
};

}  // namespace

TEST(Config, RoundTripIsIdentity) {
  for (const auto& entry : fs::directory_iterator(NKPP_CONFIG_DIR)) {
    const auto doc = cfg::Document::load(entry.path().string());
    const auto again = cfg::Document::parse(doc.serialize());
    EXPECT_TRUE(doc == again) << entry.path();
    EXPECT_EQ(doc.serialize(), again.serialize()) << entry.path();
    EXPECT_NO_THROW(experiment_from(doc)) << entry.path();
  }
}

TEST(Config, ValuesOfEveryType) {
  const auto doc = cfg::Document::parse(
      "a = 1.5e-3\nb = true\nc = \"x \\\"y\\\"\"\nd = [1, -2.5, 3]\ne = -inf\n[s]\nf = 0.1 # trailing\n");
  EXPECT_EQ(std::get<double>(doc.find("", "a")->data), 1.5e-3);
  EXPECT_EQ(std::get<bool>(doc.find("", "b")->data), true);
  EXPECT_EQ(std::get<std::string>(doc.find("", "c")->data), "x \"y\"");
  EXPECT_EQ(std::get<cfg::Array>(doc.find("", "d")->data), (cfg::Array{1, -2.5, 3}));
  EXPECT_TRUE(std::isinf(std::get<double>(doc.find("", "e")->data)));
  EXPECT_EQ(std::get<double>(doc.find("s", "f")->data), 0.1);
  EXPECT_TRUE(cfg::Document::parse(doc.serialize()) == doc);
}

TEST(Config, ParseErrorsCarryLineAndColumn) {
  auto at = [](const std::string& text, int line, int col) {
    try {
      cfg::Document::parse(text);
      ADD_FAILURE() << "no error for: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
      EXPECT_EQ(e.column(), col) << e.what();
    }
  };
  at("a = 1\nb 2\n", 2, 3);
  at("[model\n", 1, 7);
  at("a = 1\na = 2\n", 2, 1);
  at("x = [1, 2\n", 1, 5);
  at("\n\n  k = \"open\n", 3, 7);
}

TEST(Config, MissingAndUnknownKeysAreNamed) {
  auto doc = cfg::Document::parse(std::string(kSpeedConfig) + "\n[grid]\n");
  try {
    experiment_from(cfg::Document::parse("kind = \"speed\"\n[model]\nm = 1\n[kernel_plus]\nfamily = \"laplace\"\nrate = 2\n"));
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("kappa_plus"), std::string::npos) << e.what();
  }
  auto typo = cfg::Document::parse(std::string(kSpeedConfig) + "ratee = 3\n");
  try {
    experiment_from(typo);
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("ratee"), std::string::npos) << e.what();
  }
  EXPECT_THROW(experiment_from(cfg::Document::parse("kind = \"fly\"\n")), ConfigError);
}

TEST(Config, HashIgnoresFormattingButNotValues) {
  const auto a = experiment_from(cfg::Document::parse(kSpeedConfig));
  const auto b = experiment_from(cfg::Document::parse(
      "# comment\nkind=\"speed\"\n[kernel_plus]\nrate = 2.0\nfamily = \"laplace\"\n[model]\nkappa_nl = 0\n"
      "kappa_l = 1\nm = 1e0\nkappa_plus = 2\n"));
  EXPECT_EQ(a.hash, b.hash);
  std::string changed = kSpeedConfig;
  changed.replace(changed.find("rate = 2"), 8, "rate = 3");
  EXPECT_NE(a.hash, experiment_from(cfg::Document::parse(changed)).hash);
  EXPECT_EQ(a.hash.size(), 16u);
}

TEST(Config, SimulationSectionsBuildTheSolverConfig) {
  const auto e = load_experiment(std::string(NKPP_CONFIG_DIR) + "/stationary.toml");
  EXPECT_EQ(e.kind, ExperimentKind::stationary);
  EXPECT_EQ(e.seed, 7u);
  EXPECT_EQ(e.sim.grid.n[0], 256);
  EXPECT_EQ(e.sim.initial.kind, InitialCondition::Kind::random);
  EXPECT_DOUBLE_EQ(e.sim.initial.hi, 0.75 * e.sim.params.theta());
  EXPECT_EQ(e.sim.initial.seed, 7u);
}

TEST(Compare, IdenticalAndPerturbedTables) {
  io::CsvTable a{"h", {"x", "y", "name"}, {{"1", "2", "p"}, {"3", "4", "q"}}};
  auto b = a;
  auto rep = io::compare_csv(a, b, 1e-12);
  EXPECT_TRUE(rep.differing().empty());
  b.rows[1][1] = "4.0001";
  rep = io::compare_csv(a, b, 1e-12);
  ASSERT_EQ(rep.differing().size(), 1u);
  EXPECT_EQ(rep.differing()[0]->column, "y");
  EXPECT_NEAR(rep.differing()[0]->max_rel, 1e-4 / 4.0001, 1e-12);
  EXPECT_EQ(rep.differing()[0]->worst_row, 1u);
  b.header[0] = "z";
  EXPECT_THROW(io::compare_csv(a, b, 0), ConfigError);
}

TEST_F(CliTest, SpeedRunWritesTwoDirections) {
  const auto cfgp = write("speed.toml", kSpeedConfig);
  ASSERT_EQ(cli("--out " + (dir_ / "o").string() + " run " + cfgp.string()), 0) << err_;
  const auto t = io::read_csv(dir_ / "o" / "speeds.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.header[0], "xi");
  EXPECT_EQ(t.header[1], "c_star");
  EXPECT_EQ(t.header[2], "lambda_star");
  EXPECT_EQ(std::stod(t.rows[0][0]), 1.0);
  EXPECT_EQ(std::stod(t.rows[1][0]), -1.0);
  EXPECT_NEAR(std::stod(t.rows[0][1]), 1.66510, 1e-5);
  const auto e = experiment_from(cfg::Document::parse(kSpeedConfig));
  EXPECT_EQ(t.config_hash, e.hash);
  const auto summary = io::read_json(dir_ / "o" / "summary.json");
  EXPECT_EQ(summary["config_hash"], e.hash);
  EXPECT_EQ(summary["version"], NKPP_VERSION);
  EXPECT_TRUE(summary["pass"].get<bool>());
  EXPECT_TRUE(fs::exists(dir_ / "o" / "assumptions.json"));
}

TEST_F(CliTest, SimulateFromThetaGivesConstantFields) {
  const auto src = std::string(NKPP_CONFIG_DIR) + "/simulate.toml";
  ASSERT_EQ(cli("--out " + (dir_ / "o").string() + " simulate " + src), 0) << err_;
  const auto snaps = io::read_fields(dir_ / "o" / "fields.bin");
  ASSERT_GE(snaps.size(), 2u);
  EXPECT_NEAR(snaps.back().t, 2.0, 1e-12);
  for (const auto& f : snaps)
    for (double v : f.values) EXPECT_NEAR(v, 1.0, 1e-13);
}

TEST_F(CliTest, MalformedConfigsExitWithTwo) {
  const auto missing = write("missing.toml", "kind = \"speed\"\n[model]\nm = 1\n[kernel_plus]\nfamily = \"laplace\"\nrate = 2\n");
  EXPECT_EQ(cli("run " + missing.string()), 2);
  EXPECT_NE(err_.find("kappa_plus"), std::string::npos) << err_;
  const auto broken = write("broken.toml", "kind = \"speed\"\n[model\n");
  EXPECT_EQ(cli("run " + broken.string()), 2);
  EXPECT_NE(err_.find("line 2, column 7"), std::string::npos) << err_;
  EXPECT_EQ(cli("run " + (dir_ / "nope.toml").string()), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli(""), 2);
}

TEST_F(CliTest, FailedAssumptionsExitWithThreeUnlessForced) {
  // Pareto tail with alpha < 1: no first moment, so (A4) fails.
  const auto p = write("heavy.toml",
                       "kind = \"speed\"\n[model]\nkappa_plus = 2\nm = 1\n[kernel_plus]\nfamily = \"pareto_tail\"\n"
                       "alpha = 0.5\n");
  EXPECT_EQ(cli("--out " + (dir_ / "a").string() + " run " + p.string()), 3);
  EXPECT_NE(err_.find("A4"), std::string::npos) << err_;
  EXPECT_TRUE(fs::exists(dir_ / "a" / "assumptions.json"));
  EXPECT_FALSE(fs::exists(dir_ / "a" / "summary.json"));
  const int forced = cli("--force --out " + (dir_ / "b").string() + " run " + p.string());
  EXPECT_TRUE(forced == 0 || forced == 1) << err_;
  const auto t = io::read_csv(dir_ / "b" / "speeds.csv");
  EXPECT_EQ(t.rows[0][1], "inf");
  EXPECT_TRUE(io::read_json(dir_ / "b" / "summary.json")["forced"].get<bool>());
}

TEST_F(CliTest, NumericalFailuresExitWithFour) {
  std::string text = read_file(std::string(NKPP_CONFIG_DIR) + "/simulate.toml");
  text.replace(text.find("value = 1 "), 10, "value = 1.5");
  const auto p = write("tube.toml", text);
  EXPECT_EQ(cli("--out " + (dir_ / "o").string() + " run " + p.string()), 4);
  EXPECT_NE(err_.find("tube"), std::string::npos) << err_;
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  const auto src = std::string(NKPP_CONFIG_DIR) + "/stationary.toml";
  ASSERT_EQ(cli("--out " + (dir_ / "a").string() + " run " + src), 0) << err_;
  ASSERT_EQ(cli("--out " + (dir_ / "b").string() + " run " + src), 0) << err_;
  for (const auto& f : {"stationary.json", "summary.json", "assumptions.json", "config.toml"})
    EXPECT_EQ(read_file(dir_ / "a" / f), read_file(dir_ / "b" / f)) << f;
  // A different seed is a different experiment.
  ASSERT_EQ(cli("--seed 8 --out " + (dir_ / "c").string() + " run " + src), 0) << err_;
  EXPECT_NE(io::read_json(dir_ / "a" / "summary.json")["config_hash"],
            io::read_json(dir_ / "c" / "summary.json")["config_hash"]);
  EXPECT_NE(read_file(dir_ / "a" / "stationary.json"), read_file(dir_ / "c" / "stationary.json"));
}

TEST_F(CliTest, CompareReportsChangedColumnsAndGuardsHashes) {
  const auto a = write("a.toml", kSpeedConfig);
  std::string other = kSpeedConfig;
  other.replace(other.find("kappa_plus = 2"), 14, "kappa_plus = 3");
  const auto b = write("b.toml", other);
  ASSERT_EQ(cli("--out " + (dir_ / "ra").string() + " run " + a.string()), 0);
  ASSERT_EQ(cli("--out " + (dir_ / "rb").string() + " run " + a.string()), 0);
  ASSERT_EQ(cli("--out " + (dir_ / "rc").string() + " run " + b.string()), 0);
  const auto A = (dir_ / "ra" / "speeds.csv").string();
  EXPECT_EQ(cli("compare " + A + " " + (dir_ / "rb" / "speeds.csv").string()), 0);
  EXPECT_NE(out_.find("no differences"), std::string::npos);
  const auto C = (dir_ / "rc" / "speeds.csv").string();
  EXPECT_EQ(cli("compare " + A + " " + C), 2);
  EXPECT_NE(err_.find("hash"), std::string::npos);
  EXPECT_EQ(cli("--force compare " + A + " " + C), 1);
  EXPECT_NE(out_.find("c_star"), std::string::npos);
  EXPECT_NE(out_.find("lambda_star"), std::string::npos);
  EXPECT_EQ(out_.find("xi:"), std::string::npos) << out_;
  // JSON artifacts compare leaf by leaf.
  EXPECT_EQ(cli("compare " + (dir_ / "ra" / "summary.json").string() + " " + (dir_ / "rb" / "summary.json").string()), 0);
  // Different schemas.
  EXPECT_EQ(cli("--force compare " + A + " " + (dir_ / "ra" / "summary.json").string()), 2);
}

TEST_F(CliTest, RefinementStudyReportsSlopeDifference) {
  auto track = [&](int n) {
    std::ostringstream os;
    os << "kind = \"track\"\n[model]\nkappa_plus = 2\nm = 1\nkappa_l = 1\nkappa_nl = 0\n"
       << "[kernel_plus]\nfamily = \"gaussian\"\nsigma = 1\n[grid]\nn = " << n << "\nlength = 240\n"
       << "[initial]\nkind = \"ball\"\nradius = 2\namplitude = 1\n[simulation]\ndt = 0.1\nt_end = 40\n";
    return write("track" + std::to_string(n) + ".toml", os.str());
  };
  const auto a = track(1024), b = track(2048);
  ASSERT_EQ(cli("--out " + (dir_ / "n1").string() + " run " + a.string()), 0) << out_ << err_;
  ASSERT_EQ(cli("--out " + (dir_ / "n2").string() + " run " + b.string()), 0) << out_ << err_;
  EXPECT_EQ(cli("--force compare --tol 1e-2 " + (dir_ / "n1" / "slopes.csv").string() + " " +
                (dir_ / "n2" / "slopes.csv").string()),
            0)
      << out_;
  EXPECT_NE(out_.find("slope: max_rel="), std::string::npos) << out_;
}
