#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cube_transport/error.hpp"
#include "report.hpp"
#include "suites.hpp"

namespace cube_transport::cli {

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read config " + path);
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidSpec, "config " + path + " is not valid JSON: " + e.what());
  }
}

// A density flag is inline JSON, or @path to a JSON file.
nlohmann::json density_argument(const std::string& text) {
  if (!text.empty() && text.front() == '@') {
    return read_json_file(text.substr(1));
  }
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidSpec, "density argument is not valid JSON: " + std::string(e.what()));
  }
}

}  // namespace

int exit_code(std::span<const VerificationReport> reports) {
  return all_pass(reports) ? kExitPass : kExitCheckFailed;
}

int run(const RunConfig& config, std::ostream& log) {
  const SuiteOutput out = run_suites(config);
  emit_report(out, config, config.output_dir);
  std::size_t failed = 0;
  for (const auto& r : out.reports) {
    if (!r.pass) {
      ++failed;
      log << "FAIL " << r.name << ": lhs " << r.lhs << " > rhs " << r.rhs << '\n';
    }
  }
  log << to_string(config.command) << ": " << out.reports.size() << " checks, " << failed << " failed; reports in "
      << config.output_dir.string() << '\n';
  return exit_code(out.reports);
}

int main_entry(int argc, char** argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Transport maps and inequality checks for densities on the cube"};
  app.set_help_all_flag("--help-all");

  std::optional<std::string> command;
  std::optional<std::string> config_path;
  std::optional<std::string> source;
  std::optional<std::string> target;
  std::optional<int> n;
  std::optional<int> m;
  std::optional<double> ell;
  std::optional<double> rel_tol;
  std::optional<double> abs_tol;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  bool plot = false;
  std::optional<int> threads;
  std::optional<int> pairs;
  std::optional<int> knothe_pairs;
  std::optional<int> tire_pairs;
  std::optional<int> t_count;
  std::optional<int> test_functions;
  std::optional<std::size_t> pushforward_n;
  std::vector<int> dims;
  std::vector<int> ns;

  app.add_option("command", command,
                 "density-check | verify-1d | verify-knothe | tire | concentration | counterexample | all");
  app.add_option("-c,--config", config_path, "JSON config document; flags override its fields");
  app.add_option("--source", source, "source density as JSON or @file");
  app.add_option("--target", target, "target density as JSON or @file");
  app.add_option("--n", n, "grid dimension");
  app.add_option("--m", m, "cells per axis");
  app.add_option("--ell", ell, "cube side length");
  app.add_option("--rel-tol", rel_tol, "relative tolerance (default 0.05)");
  app.add_option("--abs-tol", abs_tol, "absolute tolerance (default 1e-6)");
  app.add_option("-N,--samples", samples, "Monte Carlo sample count");
  app.add_option("--seed", seed, "base seed (default: $CUBE_TRANSPORT_SEED or 12345)");
  app.add_option("-o,--output-dir", output_dir, "report directory");
  app.add_flag("--plot", plot, "write one SVG per concentration profile");
  app.add_option("--threads", threads, "worker thread cap");
  app.add_option("--pairs", pairs, "pairs per one-dimensional suite");
  app.add_option("--knothe-pairs", knothe_pairs, "random pairs in the Knothe suite");
  app.add_option("--tire-pairs", tire_pairs, "pairs in the Tire and sandwich suites");
  app.add_option("--t-count", t_count, "t values per concentration profile");
  app.add_option("--test-functions", test_functions, "random test functions per measure");
  app.add_option("--pushforward-n", pushforward_n, "samples for the pushforward check");
  app.add_option("--dims", dims, "dimensions of the concentration suite");
  app.add_option("--ns", ns, "dimensions of the counterexample table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    log << app.help();
    return kExitPass;
  } catch (const CLI::CallForAllHelp&) {
    log << app.help("", CLI::AppFormatMode::All);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  RunConfig config;
  try {
    nlohmann::json j = config_path ? read_json_file(*config_path) : nlohmann::json::object();
    if (!j.is_object()) {
      throw Error(ErrorCode::kInvalidSpec, "config must be a JSON object");
    }
    if (command) {
      j["command"] = *command;
    } else if (!j.contains("command")) {
      throw Error(ErrorCode::kInvalidSpec, "no command given");
    }
    if (source) j["source"] = density_argument(*source);
    if (target) j["target"] = density_argument(*target);
    if (n) j["grid"]["n"] = *n;
    if (m) j["grid"]["m"] = *m;
    if (ell) j["grid"]["ell"] = *ell;
    if (rel_tol) j["tolerance"]["rel_tol"] = *rel_tol;
    if (abs_tol) j["tolerance"]["abs_tol"] = *abs_tol;
    if (samples) j["monte_carlo"]["N"] = *samples;
    if (seed) j["monte_carlo"]["seed"] = *seed;
    if (output_dir) j["output_dir"] = *output_dir;
    if (plot) j["plot"] = true;
    if (threads) j["threads"] = *threads;
    if (pairs) j["suite"]["pairs_1d"] = *pairs;
    if (knothe_pairs) j["suite"]["knothe_pairs"] = *knothe_pairs;
    if (tire_pairs) j["suite"]["tire_pairs"] = *tire_pairs;
    if (t_count) j["suite"]["t_count"] = *t_count;
    if (test_functions) j["suite"]["test_functions"] = *test_functions;
    if (pushforward_n) j["suite"]["pushforward_N"] = *pushforward_n;
    if (!dims.empty()) j["suite"]["concentration_dims"] = dims;
    if (!ns.empty()) j["suite"]["counterexample_ns"] = ns;
    config = config_from_json(j);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    return run(config, log);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace cube_transport::cli
