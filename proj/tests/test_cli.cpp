#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "cube_transport/error.hpp"
#include "report.hpp"
#include "run_config.hpp"
#include "suites.hpp"

using namespace cube_transport;
using namespace cube_transport::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string log;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "cube-transport");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream log;
  std::ostringstream err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), log, err);
  return {code, log.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cube_transport_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("usage and config errors exit with 2") {
  const auto dir = scratch("errors");
  CHECK(invoke({"nonsense", "-o", dir.string()}).code == kExitUsage);
  CHECK(invoke({"-o", dir.string()}).code == kExitUsage);
  CHECK(invoke({"density-check", "--bogus-flag"}).code == kExitUsage);
  // 65^4 > 2^24
  const auto big = invoke({"density-check", "--n", "4", "--m", "65", "-o", dir.string()});
  CHECK(big.code == kExitUsage);
  CHECK(big.err.find("2^24") != std::string::npos);
  CHECK(invoke({"concentration", "-N", "999", "-o", dir.string()}).code == kExitUsage);
  CHECK(invoke({"density-check", "--config", (dir / "missing.json").string()}).code == kExitUsage);
  CHECK(invoke({"density-check", "--source", "{not json", "-o", dir.string()}).code == kExitUsage);
  CHECK(invoke({"density-check", "--source", R"({"variant":"no_such_family"})", "-o", dir.string()}).code ==
        kExitUsage);

  fs::create_directories(dir);
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "[1, 2";
  CHECK(invoke({"density-check", "--config", bad.string()}).code == kExitUsage);

  // A regular file where the output directory should be.
  const auto file = dir / "occupied";
  std::ofstream(file) << "x";
  CHECK(invoke({"density-check", "-o", (file / "sub").string()}).code == kExitUsage);
  CHECK(invoke({"--help"}).code == kExitPass);
}

TEST_CASE("exit code follows the reports") {
  std::vector<VerificationReport> reports;
  CHECK(exit_code(reports) == kExitPass);
  reports.push_back(make_report("a", "prop-2.1", 1.0, 2.0, 1.0, 8, Tolerance{}));
  CHECK(exit_code(reports) == kExitPass);
  reports.push_back(make_report("b", "prop-2.1", 3.0, 2.0, 1.0, 8, Tolerance{}));
  CHECK(exit_code(reports) == kExitCheckFailed);
}

TEST_CASE("report files") {
  RunConfig config;
  config.command = Command::kDensityCheck;

  SUBCASE("empty report list") {
    const auto dir = scratch("empty");
    emit_report(SuiteOutput{}, config, dir);
    const auto doc = read_json(dir / "report.json");
    CHECK(doc.at("reports").is_array());
    CHECK(doc.at("reports").empty());
    CHECK(lines(dir / "report.csv") == std::vector<std::string>{csv_header()});
  }
  SUBCASE("one report") {
    const auto dir = scratch("one");
    SuiteOutput out;
    out.reports.push_back(make_report("thm-3.1/x", "thm-3.1", 0.5, 1.0, 2.0, 16, Tolerance{}));
    emit_report(out, config, dir);
    const auto rows = lines(dir / "report.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == "name,lhs,rhs,constant,slack,pass,m");
    CHECK(rows[1].rfind("thm-3.1/x,", 0) == 0);
    const auto doc = read_json(dir / "report.json");
    REQUIRE(doc.at("reports").size() == 1);
    CHECK(doc["reports"][0]["tag"] == "thm-3.1");
    CHECK(doc.at("config").at("command") == "density-check");
    CHECK(doc.contains("timestamp"));
    CHECK(doc.contains("environment"));
  }
  SUBCASE("profiles with and without plots") {
    SuiteOutput out;
    ConcentrationProfile p;
    p.direction = {1.0};
    p.alpha = 3.0;
    for (int k = 1; k <= 20; ++k) {
      p.ts.push_back(0.05 * k);
      p.measured.push_back(0.5 + 0.025 * k);
      p.standard_error.push_back(0.001);
      p.bound.push_back(1.0 - std::exp(-p.ts.back() * p.ts.back() / 9.0));
    }
    out.profiles.push_back({"cor-1.3/demo", p});
    const auto plain = scratch("noplot");
    emit_report(out, config, plain);
    CHECK(fs::exists(plain / "profile_cor-1.3_demo.csv"));
    CHECK_FALSE(fs::exists(plain / "profile_cor-1.3_demo.svg"));
    config.plot = true;
    const auto plotted = scratch("plot");
    emit_report(out, config, plotted);
    std::ifstream in(plotted / "profile_cor-1.3_demo.svg");
    const std::string svg((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t polylines = 0;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++polylines;
    CHECK(polylines == 2);
    CHECK(svg.find("<polygon") != std::string::npos);
  }
}

TEST_CASE("config layering") {
  const auto dir = scratch("layering");
  fs::create_directories(dir);
  const auto path = dir / "config.json";
  std::ofstream(path) << R"({"command": "density-check", "grid": {"n": 2, "m": 16},
                            "source": {"variant": "exponential_tilt", "v": [1.0, -0.5]},
                            "output_dir": ")" << (dir / "out").string() << R"("})";
  const auto run = invoke({"--config", path.string(), "--m", "8", "--seed", "77"});
  CHECK(run.code == kExitPass);
  const auto doc = read_json(dir / "out" / "report.json");
  CHECK(doc["config"]["grid"]["m"] == 8);
  CHECK(doc["config"]["grid"]["n"] == 2);
  CHECK(doc["config"]["monte_carlo"]["seed"] == 77);
  CHECK(doc["config"]["tolerance"]["rel_tol"] == 0.05);
  CHECK(doc["config"]["tolerance"]["abs_tol"] == 1e-6);
  REQUIRE(doc["reports"].size() == 1);
  CHECK(doc["reports"][0]["name"] == "lemma-3.3/source");
  CHECK(doc["diagnostics"]["density-check"]["source"]["R_hat"].get<double>() == doctest::Approx(1.0));

  // A one-dimensional density check has nothing to verify: empty reports, exit 0.
  const auto one = invoke({"density-check", "--n", "1", "--m", "32", "-o", (dir / "one").string()});
  CHECK(one.code == kExitPass);
  CHECK(read_json(dir / "one" / "report.json")["reports"].empty());
}

TEST_CASE("seed from the environment") {
  ::setenv("CUBE_TRANSPORT_SEED", "4242", 1);
  CHECK(default_seed() == 4242);
  CHECK(config_from_json({{"command", "tire"}}).seed == 4242);
  ::setenv("CUBE_TRANSPORT_SEED", "abc", 1);
  CHECK_THROWS_AS(default_seed(), Error);
  ::unsetenv("CUBE_TRANSPORT_SEED");
  CHECK(default_seed() == kDefaultSeed);
}

TEST_CASE("identical configs give identical reports") {
  const auto a = scratch("repro_a");
  const auto b = scratch("repro_b");
  const std::vector<std::string> common{"concentration", "-N", "2000", "--dims", "2", "--t-count", "5",
                                        "--test-functions", "2", "--seed", "9"};
  auto args_a = common;
  args_a.insert(args_a.end(), {"-o", a.string()});
  auto args_b = common;
  args_b.insert(args_b.end(), {"-o", b.string()});
  REQUIRE(invoke(args_a).code == kExitPass);
  REQUIRE(invoke(args_b).code == kExitPass);
  auto ja = read_json(a / "report.json");
  auto jb = read_json(b / "report.json");
  ja.erase("timestamp");
  jb.erase("timestamp");
  ja["config"].erase("output_dir");
  jb["config"].erase("output_dir");
  CHECK(ja.dump() == jb.dump());
}
