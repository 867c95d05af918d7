#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prstab/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "prstab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = prstab::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const char* name) { return std::string(PRSTAB_FIXTURE_DIR) + "/" + name; }

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("prstab_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("certify fixtures") {
    const Outcome mb = run_cli({"certify", fixture("mb3.csv")});
    REQUIRE(mb.code == 0);
    const auto j = nlohmann::json::parse(mb.out);
    CHECK(j["command"] == "certify");
    CHECK(j["retrievable"] == true);
    CHECK(j["a0"].get<double>() == doctest::Approx(0.375));

    const auto s = nlohmann::json::parse(run_cli({"certify", fixture("std_basis2.csv")}).out);
    CHECK(s["retrievable"] == false);
    CHECK(s["witness_bits"] == "10");

    const auto r = nlohmann::json::parse(run_cli({"certify", fixture("repeated_column.csv")}).out);
    CHECK(r["retrievable"] == false);
    CHECK(r["witness_bits"] == "110");
  }

  TEST_CASE("constants on MB3") {
    const Outcome c = run_cli({"constants", fixture("mb3.json")});
    REQUIRE(c.code == 0);
    const auto j = nlohmann::json::parse(c.out);
    const double r = std::sqrt(0.5);
    CHECK(j["A"].get<double>() == doctest::Approx(1.5));
    CHECK(j["B"].get<double>() == doctest::Approx(1.5));
    CHECK(j["a0"].get<double>() == doctest::Approx(0.375));
    CHECK(j["Delta"].get<double>() == doctest::Approx(r));
    CHECK(j["omega"].get<double>() == doctest::Approx(r));
    CHECK(j["tau"].get<double>() == doctest::Approx(r));
    CHECK(j["lambdaF"].get<double>() == doctest::Approx(std::pow(9.0 / 8, 0.25)));
    CHECK(j["mu0"].get<double>() == doctest::Approx(std::sqrt(0.375)));
    CHECK(j["exact_flags"]["Delta"] == true);
  }

  TEST_CASE("stability, crlb and simulate") {
    const Outcome s = run_cli({"stability", fixture("mb3.csv"), "--x", "1,0", "--eps", "0.1"});
    REQUIRE(s.code == 0);
    const auto sj = nlohmann::json::parse(s.out);
    CHECK(sj["q_estimate"].get<double>() == doctest::Approx(std::sqrt(2.0 / 3)).epsilon(1e-3));

    const Outcome c = run_cli({"crlb", fixture("mb3.csv"), "--x", "0.6,0.8", "--sigma", "0.1"});
    REQUIRE(c.code == 0);
    CHECK(nlohmann::json::parse(c.out)["trace"].get<double>() == doctest::Approx(0.0025 * 32 / 9));

    const fs::path dir = scratch_dir("simulate");
    const Outcome m = run_cli({"simulate", fixture("mb3.csv"), "--x", "0.6,0.8", "--sigma", "0.01", "--trials", "5",
                               "--output", (dir / "s.json").string(), "--csv", (dir / "s.csv").string()});
    REQUIRE(m.code == 0);
    CHECK(m.out.empty());
    const std::string csv = slurp(dir / "s.csv");
    CHECK(csv.rfind("trial,residual,distance\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(nlohmann::json::parse(slurp(dir / "s.json"))["trials"] == 5);
  }

  TEST_CASE("random-study") {
    const Outcome r = run_cli({"random-study", "--study", "minimal", "--n-list", "2,3", "--trials", "3"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["command"] == "random-study");
    CHECK(run_cli({"random-study", "--study", "redundancy", "--n-list", "4", "--r0", "2"}).code == 2);
    CHECK(run_cli({"random-study", "--study", "bogus", "--n-list", "4"}).code == 2);
    CHECK(run_cli({"random-study", "--study", "tau", "--n-list", "30", "--k", "15", "--subset-budget", "1000"}).code ==
          3);
  }

  TEST_CASE("exit codes and messages") {
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    const Outcome missing = run_cli({"certify", fixture("missing.csv")});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("missing.csv") != std::string::npos);

    const fs::path dir = scratch_dir("bad");
    std::ofstream(dir / "bad.csv") << "1,0\n0,zz\n";
    const Outcome bad = run_cli({"certify", (dir / "bad.csv").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("bad.csv:2: field 2") != std::string::npos);

    const Outcome dim = run_cli({"crlb", fixture("mb3.csv"), "--x", "1,0,0", "--sigma", "0.1"});
    CHECK(dim.code == 2);
    CHECK(dim.err.find("--x") != std::string::npos);
    const Outcome sig = run_cli({"crlb", fixture("mb3.csv"), "--x", "1,0", "--sigma", "-1"});
    CHECK(sig.code == 2);
    CHECK(sig.err.find("--sigma") != std::string::npos);
    CHECK(run_cli({"stability", fixture("mb3.csv"), "--x", "1,0", "--eps", "0"}).code == 2);

    const Outcome budget = run_cli({"constants", fixture("gaussian_4x11.csv"), "--mode", "exact", "--subset-budget", "10"});
    CHECK(budget.code == 3);
    CHECK(budget.err.find("budget") != std::string::npos);

    // Singular Fisher information is a numerical failure, not a usage error.
    CHECK(run_cli({"crlb", fixture("std_basis2.csv"), "--x", "1,0", "--sigma", "0.1"}).code == 1);
    CHECK(run_cli({"certify", "--help"}).code == 0);
  }

  TEST_CASE("output directory from the environment and byte-identical reruns") {
    const fs::path dir = scratch_dir("env");
    ::setenv("PRSTAB_OUT_DIR", dir.string().c_str(), 1);
    const Outcome a = run_cli({"constants", fixture("gaussian_4x11.csv"), "--seed", "3"});
    const std::string first = slurp(dir / "constants.json");
    const Outcome b = run_cli({"constants", fixture("gaussian_4x11.csv"), "--seed", "3", "--jobs", "3"});
    ::unsetenv("PRSTAB_OUT_DIR");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(a.out.empty());
    CHECK_FALSE(first.empty());
    CHECK(slurp(dir / "constants.json") == first);
  }
}
