#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pdflow/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "pdflow");
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());

  std::ostringstream out, err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code =
      pdflow::run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

std::string out_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pdflow_cli_tests" / name;
  fs::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("dump-defaults prints the full schema") {
  const CliResult r = run({"config", "dump-defaults"});
  CHECK(r.code == 0);
  for (const char* key : {"instance", "system", "alpha", "theta", "c", "p", "q",
                          "s", "t0", "t_end", "samples", "rtol", "atol",
                          "max_steps", "out", "workers", "seed"})
    CHECK(r.out.find(std::string(key) + " = ") != std::string::npos);
}

TEST_CASE("missing config file exits 2 and names the path") {
  const CliResult r = run({"simulate", "--config", "/nonexistent/exp.cfg"});
  CHECK(r.code == 2);
  CHECK(r.err.find("/nonexistent/exp.cfg") != std::string::npos);
}

TEST_CASE("out-of-range overrides exit 2") {
  CHECK(run({"simulate", "--set", "p=1.5"}).code == 2);
  CHECK(run({"simulate", "--set", "nonsense"}).code == 2);
  CHECK(run({"rates", "--set", "unknown_key=1"}).code == 2);
}

TEST_CASE("unknown subcommands exit 2") {
  CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("rates prints the predicted exponent table") {
  const CliResult r =
      run({"rates", "--set", "q=0", "--set", "p=0.5", "--set", "s=0.5"});
  CHECK(r.code == 0);
  CHECK(r.out.find("GapOptimal") != std::string::npos);
  CHECK(r.out.find("feasibility\t0.5") != std::string::npos);

  const CliResult improved =
      run({"rates", "--set", "q=0.1", "--set", "p=0.6", "--set", "s=0.65"});
  CHECK(improved.out.find("dist_saddle_x_sq\t0.3") != std::string::npos);

  const CliResult oot = run({"rates", "--set", "s=1.5"});
  CHECK(oot.code == 0);
  CHECK(oot.out.find("OutOfTheory") != std::string::npos);
}

TEST_CASE("simulate runs end to end") {
  const CliResult r = run({"simulate", "--set", "t_end=100", "--set",
                           "samples=50", "--out", out_dir("simulate")});
  CHECK(r.code == 0);
  CHECK(r.out.find("overall = pass") != std::string::npos);
  CHECK(r.out.find("artifacts = ") != std::string::npos);
  CHECK(r.err.empty());
}

TEST_CASE("simulate warns when the theory does not cover the parameters") {
  const CliResult oot =
      run({"simulate", "--set", "s=1.5", "--set", "t_end=100", "--set",
           "samples=50", "--out", out_dir("simulate_oot")});
  CHECK(oot.code == 0);
  CHECK(oot.err.find("outside every tagged regime") != std::string::npos);

  const CliResult flagged =
      run({"simulate", "--set", "theta=0.2", "--set", "t_end=100", "--set",
           "samples=50", "--out", out_dir("simulate_flagged")});
  CHECK(flagged.code == 0);
  CHECK(flagged.err.find("standing assumption") != std::string::npos);
}

TEST_CASE("sweep runs end to end") {
  const CliResult r =
      run({"sweep", "--axis", "s", "--values", "0.4,0.6", "--set", "t_end=100",
           "--set", "samples=40", "--out", out_dir("sweep")});
  CHECK(r.code == 0);
  CHECK(r.out.find("value\tregime") != std::string::npos);
}

TEST_CASE("verify integrator passes") {
  const CliResult r = run({"verify", "integrator"});
  CHECK(r.code == 0);
  CHECK(r.out.find("[PASS] third-order step halving") != std::string::npos);
}

TEST_CASE("verify saddle passes") {
  const CliResult r = run({"verify", "saddle"});
  CHECK(r.code == 0);
  CHECK(r.out.find("[PASS] saddle path norm bound") != std::string::npos);
  CHECK(r.out.find("[PASS] saddle derivative identity") != std::string::npos);
}

TEST_CASE("verify lemmas passes, and the corrupted fixture fails loudly") {
  const CliResult ok =
      run({"verify", "lemmas", "--out", out_dir("lemmas_ok")});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("[PASS] scaled feasibility bounded") != std::string::npos);

  const CliResult bad = run({"verify", "lemmas", "--negative-control", "--out",
                             out_dir("lemmas_bad")});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("ConclusionFailed") != std::string::npos);
}
