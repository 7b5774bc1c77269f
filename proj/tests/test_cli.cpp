// Integration tests that drive the installed command line tool.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(STOCHRATE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "stochrate_cli_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << body;
  return p;
}

}  // namespace

TEST_CASE("catalog exits zero") { CHECK(run("catalog") == 0); }

TEST_CASE("rate and validate round trips through the binary") {
  const fs::path cfg = write_config("rs.ini", R"(
[experiment]
theorem = rs

[moduli]
f = id
tau = convex:id
K = 1
L = 1
M = 0
theta = affine:1
chi = zero

[grid]
epsilon = 0.5,0.2,0.1

[mc]
trials = 100
horizon = 50
)");
  const fs::path out = cfg.parent_path() / "out_rate";
  CHECK(run("rate --config " + cfg.string() + " --out " + out.string() +
            " --format both") == 0);
  CHECK(fs::exists(out / "rate.csv"));
  CHECK(fs::exists(out / "rate.json"));

  const fs::path vcfg = write_config("fejer.ini", R"(
[experiment]
theorem = fejer

[model]
name = km
r = 0.5
lambda = const:0.5
noise = zero
space = euclidean:1
x0 = 1

[moduli]
tau = quasi-contraction:0.5

[grid]
epsilon = 0.25

[mc]
trials = 64
horizon = 200
seed = 4
)");
  const fs::path vout = cfg.parent_path() / "out_validate";
  CHECK(run("validate --config " + vcfg.string() + " --out " + vout.string()) == 0);
  CHECK(fs::exists(vout / "validate.csv"));
}

TEST_CASE("counterexample validate passes end to end") {
  const fs::path cfg = write_config("counter.ini", R"(
[experiment]
theorem = general

[model]
name = counterexample

[moduli]
f = power:0.5

[grid]
epsilon = 0.5,0.2,0.1

[mc]
trials = 20000
horizon = 40
seed = 12
)");
  const fs::path out = cfg.parent_path() / "out_counter";
  CHECK(run("validate --config " + cfg.string() + " --out " + out.string()) == 0);
}

TEST_CASE("config errors exit with code 2") {
  const fs::path broken = write_config("broken.ini", R"(
[experiment]
theorem = rs

[moduli]
f = id
tau = convex:id
K = 1
L = 1
M = 0
chi = zero

[grid]
epsilon = 0.5

[mc]
trials = 100
horizon = 50
)");
  CHECK(run("rate --config " + broken.string()) == 2);
  CHECK(run("rate --config /nonexistent/path.ini") == 2);
}

TEST_CASE("validation failures exit with code 1") {
  const fs::path failing = write_config("failing.ini", R"(
[experiment]
theorem = general

[model]
name = counterexample

[moduli]
f = id
K = 1
chi = zero
liminf = shift:0.001

[grid]
epsilon = 0.5

[mc]
trials = 2000
horizon = 40
seed = 6
)");
  const fs::path out = failing.parent_path() / "out_fail";
  CHECK(run("validate --config " + failing.string() + " --out " + out.string()) == 1);
}

TEST_CASE("trajectory reruns are byte-identical with a fixed seed") {
  const fs::path cfg = write_config("traj.ini", R"(
[experiment]
trajectories = 2

[model]
name = counterexample

[mc]
trials = 2
horizon = 12
seed = 31
)");
  const fs::path out = cfg.parent_path() / "out_traj";
  CHECK(run("trajectory --config " + cfg.string() + " --out " + out.string()) == 0);
  std::ifstream in1(out / "trajectory.csv");
  std::string first((std::istreambuf_iterator<char>(in1)), std::istreambuf_iterator<char>());
  CHECK(run("trajectory --config " + cfg.string() + " --out " + out.string()) == 0);
  std::ifstream in2(out / "trajectory.csv");
  std::string second((std::istreambuf_iterator<char>(in2)), std::istreambuf_iterator<char>());
  CHECK(!first.empty());
  CHECK(first == second);

  // --seed overrides the config seed and changes sampled values
  const fs::path out2 = cfg.parent_path() / "out_traj_seed";
  CHECK(run("trajectory --config " + cfg.string() + " --out " + out2.string() +
            " --seed 77") == 0);

  // --count overrides the configured trajectory count
  const fs::path out3 = cfg.parent_path() / "out_traj_count";
  CHECK(run("trajectory --config " + cfg.string() + " --out " + out3.string() +
            " --count 1") == 0);
  std::ifstream in3(out3 / "trajectory.csv");
  std::string third((std::istreambuf_iterator<char>(in3)), std::istreambuf_iterator<char>());
  std::size_t lines = 0;
  for (char c : third)
    if (c == '\n') ++lines;
  CHECK(lines == 15);  // schema + header + 13 rows for one trajectory
}
