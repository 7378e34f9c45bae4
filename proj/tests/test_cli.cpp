// End-to-end tests of the qfi binary: subcommands, exit codes, golden files.

#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(QFI_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("qfigeo_test_" + name);
}

const fs::path kSourceDir = QFIGEO_SOURCE_DIR;

}  // namespace

TEST_CASE("list-families names every builtin") {
  const CliResult r = run_cli("list-families");
  CHECK(r.exit_code == 0);
  for (const char* name : {"example1", "example2", "example3-regularized", "fig2-pathological",
                           "pure-qubit-rotation", "random-full-rank"}) {
    CHECK(r.output.find(name) != std::string::npos);
  }
}

TEST_CASE("jump subcommand renders the report as JSON") {
  const CliResult r = run_cli("jump example2 --at 0,0 --dir 0,1");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.output);
  CHECK(doc["delta"][0][0].get<double>() == doctest::Approx(-2.0));
  CHECK(doc["hc"][0][0].get<double>() == doctest::Approx(2.0));
  CHECK(doc["contributing"].size() == 1);

  const CliResult along_e1 = run_cli("jump example2 --at 0,0 --dir 1,0");
  REQUIRE(along_e1.exit_code == 0);
  CHECK(json::parse(along_e1.output)["delta"][0][0].get<double>() == doctest::Approx(0.0));

  const CliResult full_rank = run_cli("jump example1 --at 0.5 --dir 1");
  REQUIRE(full_rank.exit_code == 0);
  CHECK(json::parse(full_rank.output)["delta"][0][0].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("jump --confirm attaches the directional-limit residual") {
  const CliResult r = run_cli("jump example2 --at 0,0 --dir 0,1 --confirm");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.output);
  CHECK(doc["confirmation"]["residual"].get<double>() < 1e-3);
  CHECK(doc["confirmation"]["limit"][0][0].get<double>() == doctest::Approx(0.0).epsilon(1e-3));
}

TEST_CASE("jump validation failures exit with code 2") {
  CHECK(run_cli("jump no-such-family --at 0 --dir 1").exit_code == 2);
  CHECK(run_cli("jump example2 --at 0,0 --dir 0,0").exit_code == 2);
  CHECK(run_cli("jump example2 --at 0,0").exit_code == 2);  // missing --dir
}

TEST_CASE("regularize subcommand reproduces Theorem-4 behaviour") {
  const CliResult r =
      run_cli("regularize example1 --at 1.5707963267948966 --schedule 1e-1,1e-2,1e-3,1e-4,1e-5");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.output);
  CHECK(std::abs(doc["limit"][0][0].get<double>()) < 1e-4);
  CHECK(doc["limit_plus_2_hessian_sum"][0][0].get<double>() == doctest::Approx(4.0).epsilon(1e-4));
  CHECK(doc["rho0"].get<std::string>() == "maximally mixed (I/dim)");
}

TEST_CASE("verify runs the property suite") {
  const CliResult ok = run_cli("verify --trials 4 --seed 7");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("[PASS]") != std::string::npos);
  CHECK(ok.output.find("[FAIL]") == std::string::npos);

  CHECK(run_cli("verify --trials 0").exit_code == 2);
}

TEST_CASE("run executes the shipped scenarios") {
  for (const char* name :
       {"example1_fig1.scn", "example2_fig3.scn", "example3_fig4.scn", "fig2_pathological.scn",
        "pure_qubit_rotation.scn", "random_full_rank.scn"}) {
    const fs::path scn = kSourceDir / "scenarios" / name;
    const fs::path out = temp_file(std::string("scn_") + name + ".csv");
    const CliResult r = run_cli("run " + scn.string() + " --out " + out.string());
    CAPTURE(name);
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out));
    fs::remove(out);
  }
}

TEST_CASE("run output is byte-identical across reruns and thread counts") {
  const fs::path scn = kSourceDir / "tests" / "golden" / "example1_small.scn";
  const fs::path out1 = temp_file("det1.csv");
  const fs::path out2 = temp_file("det2.csv");
  REQUIRE(run_cli("run " + scn.string() + " --out " + out1.string()).exit_code == 0);
  REQUIRE(run_cli("run " + scn.string() + " --out " + out2.string() + " --threads 4").exit_code ==
          0);
  CHECK(slurp(out1) == slurp(out2));
  fs::remove(out1);
  fs::remove(out2);
}

TEST_CASE("golden outputs are pinned") {
  const struct {
    const char* scenario;
    const char* golden;
    const char* format;
  } cases[] = {
      {"example1_small.scn", "example1_small.csv", "csv"},
      {"example2_small.scn", "example2_small.csv", "csv"},
      {"example3_small.scn", "example3_small.csv", "csv"},
      {"trace_small.scn", "trace_small.csv", "csv"},
      {"fig2_small.scn", "fig2_small.csv", "csv"},
      {"pure_qubit_small.scn", "pure_qubit_small.csv", "csv"},
      {"random_small.scn", "random_small.json", "json"},
  };
  for (const auto& c : cases) {
    const fs::path scn = kSourceDir / "tests" / "golden" / c.scenario;
    const fs::path golden = kSourceDir / "tests" / "golden" / c.golden;
    const fs::path out = temp_file(c.golden);
    const CliResult r =
        run_cli("run " + scn.string() + " --out " + out.string() + " --format " + c.format);
    CAPTURE(c.scenario);
    CAPTURE(r.output);
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(out) == slurp(golden));
    fs::remove(out);
  }
}

TEST_CASE("run propagates failure exit codes") {
  CHECK(run_cli("run /does/not/exist.scn --out /tmp/x.csv").exit_code == 2);

  // scenario with an invalid row: partial output, exit 3
  const fs::path scn = kSourceDir / "tests" / "golden" / "partial_failure.scn";
  const fs::path out = temp_file("partial.csv");
  const CliResult r = run_cli("run " + scn.string() + " --out " + out.string());
  CHECK(r.exit_code == 3);
  const std::string text = slurp(out);
  CHECK(text.find("InvariantViolation") != std::string::npos);
  CHECK(text.find("ok") != std::string::npos);
  fs::remove(out);
}
