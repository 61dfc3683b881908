#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "nonsticky/brownian.hpp"
#include "nonsticky/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " NONSTICKY_CLI_PATH " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(NONSTICKY_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nonsticky_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }

  fs::path dir_;
};

const char* kSmallWeak = R"([coefficient]
kind = power_law
alpha = 0.25
[problem]
x0 = 1
[study]
kind = weak_ks
levels = 4, 6
n_paths = 400
seed = 5
)";

}  // namespace

TEST_F(CliTest, ClassifyExitCodes) {
  const auto quarter = run("classify " + config("cev_quarter.ini"));
  EXPECT_EQ(quarter.code, 0);
  EXPECT_NE(quarter.out.find("classification: VanishesAsEpsToZero"), std::string::npos);
  EXPECT_NE(quarter.out.find("eps,integral"), std::string::npos);
  const auto half = run("classify " + config("cev_half.ini"));
  EXPECT_EQ(half.code, 1);
  EXPECT_NE(half.out.find("Divergent"), std::string::npos);
  EXPECT_EQ(run("classify " + write("a.ini", "[coefficient]\nkind = power_law\n")).code, 2);
  EXPECT_EQ(run("classify " + config("brownian.ini")).code, 0);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("run " + config("trap_control.ini")).code, 2);  // no --out-dir
  EXPECT_EQ(run("run " + config("trap_control.ini") + " --out-dir x --workers 0").code, 2);
  EXPECT_EQ(run("classify /nonexistent.ini").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, TrapControlRun) {
  const fs::path out = dir_ / "trap";
  const auto r = run("run " + config("trap_control.ini") + " --out-dir " + out.string() + " --workers 2");
  EXPECT_EQ(r.code, 0);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["verdict"], "pass");
  ASSERT_EQ(summary["rows"].size(), 2u);
  EXPECT_EQ(summary["rows"][0]["arm"], "no_shift");
  EXPECT_EQ(summary["rows"][1]["arm"], "shift");
  EXPECT_EQ(summary["rows"][0]["statistic"], 0.0);

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(manifest["workers"], 2);
  EXPECT_EQ(manifest["config_hash"],
            nonsticky::config::config_hash(slurp(config("trap_control.ini"))));
  EXPECT_EQ(summary["provenance"]["config_hash"], manifest["config_hash"]);
  const std::string csv = slurp(out / "results.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "level,arm,statistic,ci_low,ci_high,n_paths,wall_seconds");
}

TEST_F(CliTest, FewPathsAreFlagged) {
  std::string text = kSmallWeak;
  text.replace(text.find("n_paths = 400"), 13, "n_paths = 10");
  const fs::path out = dir_ / "few";
  const auto r = run("run " + write("few.ini", text) + " --out-dir " + out.string());
  EXPECT_NE(r.code, 2);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["ci_reliable"], false);
  EXPECT_FALSE(summary["notes"].empty());
}

TEST_F(CliTest, UnwritableOutDir) {
  const std::string blocker = write("blocker", "x");
  EXPECT_EQ(run("run " + write("w.ini", kSmallWeak) + " --out-dir " + blocker + "/sub").code, 2);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  const fs::path out = dir_ / "bad";
  const std::string occ = "[coefficient]\nkind = power_law\nalpha = 0.25\n[study]\n"
                          "kind = occupation_scaling\nlevels = 6\nn_paths = 100\neps = 0.01, 0.005\n";
  EXPECT_EQ(run("run " + write("occ.ini", occ) + " --out-dir " + out.string()).code, 2);
  const std::string trap = "[coefficient]\nkind = power_law\nalpha = 0.25\n[problem]\nx0 = 1\n"
                           "[study]\nkind = trap_control\nlevels = 6\nn_paths = 100\n";
  EXPECT_EQ(run("run " + write("trap.ini", trap) + " --out-dir " + out.string()).code, 2);
}

TEST_F(CliTest, SeedOverride) {
  const std::string cfg = write("w.ini", kSmallWeak);
  run("run " + cfg + " --out-dir " + (dir_ / "a").string() + " --seed 99");
  run("run " + cfg + " --out-dir " + (dir_ / "b").string());
  const auto a = nlohmann::json::parse(slurp(dir_ / "a" / "summary.json"));
  const auto b = nlohmann::json::parse(slurp(dir_ / "b" / "summary.json"));
  EXPECT_EQ(a["provenance"]["seed"], 99);
  EXPECT_EQ(b["provenance"]["seed"], 5);
  EXPECT_NE(a["rows"], b["rows"]);
}

TEST_F(CliTest, SummaryIndependentOfWorkers) {
  const std::string cfg = write("w.ini", kSmallWeak);
  run("run " + cfg + " --out-dir " + (dir_ / "w1").string() + " --workers 1");
  run("run " + cfg + " --out-dir " + (dir_ / "w4").string() + " --workers 4");
  const std::string one = slurp(dir_ / "w1" / "summary.json");
  EXPECT_FALSE(one.empty());
  EXPECT_EQ(one, slurp(dir_ / "w4" / "summary.json"));
}

TEST_F(CliTest, WorkersFromEnvironment) {
  const fs::path out = dir_ / "env";
  run("run " + write("w.ini", kSmallWeak) + " --out-dir " + out.string(), "NONSTICKY_WORKERS=3");
  EXPECT_EQ(nlohmann::json::parse(slurp(out / "manifest.json"))["workers"], 3);
}

TEST_F(CliTest, DumpPathBrownian) {
  const auto r = run("dump-path " + config("brownian.ini") + " --level 2 --seed 7 --path-index 3");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x");
  std::vector<double> ts, xs;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    ts.push_back(std::stod(line.substr(0, comma)));
    xs.push_back(std::stod(line.substr(comma + 1)));
  }
  ASSERT_EQ(xs.size(), 5u);
  const auto lat = nonsticky::generate_lattice(7, 3, 2);
  double w = 0.0;
  EXPECT_EQ(xs[0], 0.0);
  for (std::size_t k = 0; k < 4; ++k) {
    w += lat.increments()[k];
    EXPECT_EQ(xs[k + 1], w);
    EXPECT_EQ(ts[k + 1], 0.25 * static_cast<double>(k + 1));
  }
  EXPECT_EQ(run("dump-path " + config("brownian.ini") + " --level 2 --seed 7 --path-index 3").out,
            r.out);
}

TEST_F(CliTest, DumpPathNoShiftIsZero) {
  const auto r = run("dump-path " + config("cev_quarter.ini") + " --level 8 --no-shift");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.substr(line.find(',') + 1), "0");
    ++rows;
  }
  EXPECT_EQ(rows, 257u);
  const auto shifted = run("dump-path " + config("cev_quarter.ini") + " --level 8");
  EXPECT_NE(shifted.out.find("\n0,0.0625\n"), std::string::npos);
}

TEST_F(CliTest, DumpPathLevelCap) {
  EXPECT_EQ(run("dump-path " + config("brownian.ini") + " --level 27").code, 2);
  EXPECT_EQ(run("dump-path " + config("brownian.ini")).code, 2);  // --level required
}
