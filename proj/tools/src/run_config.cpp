#include "run_config.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <utility>

#include "cube_transport/error.hpp"
#include "cube_transport/grid.hpp"
#include "cube_transport/spec_json.hpp"

namespace cube_transport::cli {

namespace {

constexpr std::array<std::pair<Command, const char*>, 7> kCommands{{
    {Command::kDensityCheck, "density-check"},
    {Command::kVerify1d, "verify-1d"},
    {Command::kVerifyKnothe, "verify-knothe"},
    {Command::kTire, "tire"},
    {Command::kConcentration, "concentration"},
    {Command::kCounterexample, "counterexample"},
    {Command::kAll, "all"},
}};

template <typename T>
T field(const nlohmann::json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("config field ") + section + "." + key + ": " + e.what());
  }
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("config field ") + key + ": " + e.what());
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw Error(ErrorCode::kInvalidSpec, what);
  }
}

}  // namespace

std::string to_string(Command c) {
  for (const auto& [cmd, name] : kCommands) {
    if (cmd == c) {
      return name;
    }
  }
  return "unknown";
}

Command command_from_string(const std::string& s) {
  for (const auto& [cmd, name] : kCommands) {
    if (s == name) {
      return cmd;
    }
  }
  throw Error(ErrorCode::kInvalidSpec, "unknown command '" + s + "'");
}

std::uint64_t default_seed() {
  const char* env = std::getenv("CUBE_TRANSPORT_SEED");
  if (env == nullptr || *env == '\0') {
    return kDefaultSeed;
  }
  char* end = nullptr;
  const auto value = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw Error(ErrorCode::kInvalidSpec, std::string("CUBE_TRANSPORT_SEED is not an integer: ") + env);
  }
  return value;
}

nlohmann::json default_config_json() {
  RunConfig c;
  c.seed = default_seed();
  return to_json(c);
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["command"] = to_string(c.command);
  j["source"] = c.source ? density_spec_to_json(*c.source) : nlohmann::json(nullptr);
  j["target"] = c.target ? density_spec_to_json(*c.target) : nlohmann::json(nullptr);
  j["grid"] = {{"n", c.n}, {"m", c.m}, {"ell", c.ell}};
  j["tolerance"] = {{"rel_tol", c.tolerance.rel}, {"abs_tol", c.tolerance.abs}};
  j["monte_carlo"] = {{"N", c.samples}, {"seed", c.seed}};
  j["output_dir"] = c.output_dir.string();
  j["plot"] = c.plot;
  j["threads"] = c.threads;
  const auto& s = c.suite;
  j["suite"] = {{"pairs_1d", s.pairs_1d},
                {"m_1d", s.m_1d},
                {"knothe_pairs", s.knothe_pairs},
                {"tire_pairs", s.tire_pairs},
                {"sandwich_subdivisions", s.sandwich_subdivisions},
                {"pushforward_N", s.pushforward_n},
                {"concentration_dims", s.concentration_dims},
                {"t_count", s.t_count},
                {"test_functions", s.test_functions},
                {"counterexample_ns", s.counterexample_ns}};
  return j;
}

RunConfig config_from_json(const nlohmann::json& input) {
  require(input.is_object(), "config must be a JSON object");
  nlohmann::json j = default_config_json();
  j.merge_patch(input);

  RunConfig c;
  c.command = command_from_string(field<std::string>(j, "command"));
  if (!j.at("source").is_null()) {
    c.source = density_spec_from_json(j.at("source"));
  }
  if (!j.at("target").is_null()) {
    c.target = density_spec_from_json(j.at("target"));
  }
  c.n = field<int>(j, "grid", "n");
  c.m = field<int>(j, "grid", "m");
  c.ell = field<double>(j, "grid", "ell");
  c.tolerance.rel = field<double>(j, "tolerance", "rel_tol");
  c.tolerance.abs = field<double>(j, "tolerance", "abs_tol");
  c.samples = field<std::size_t>(j, "monte_carlo", "N");
  c.seed = field<std::uint64_t>(j, "monte_carlo", "seed");
  c.output_dir = field<std::string>(j, "output_dir");
  c.plot = field<bool>(j, "plot");
  c.threads = field<int>(j, "threads");
  auto& s = c.suite;
  s.pairs_1d = field<int>(j, "suite", "pairs_1d");
  s.m_1d = field<int>(j, "suite", "m_1d");
  s.knothe_pairs = field<int>(j, "suite", "knothe_pairs");
  s.tire_pairs = field<int>(j, "suite", "tire_pairs");
  s.sandwich_subdivisions = field<int>(j, "suite", "sandwich_subdivisions");
  s.pushforward_n = field<std::size_t>(j, "suite", "pushforward_N");
  s.concentration_dims = field<std::vector<int>>(j, "suite", "concentration_dims");
  s.t_count = field<int>(j, "suite", "t_count");
  s.test_functions = field<int>(j, "suite", "test_functions");
  s.counterexample_ns = field<std::vector<int>>(j, "suite", "counterexample_ns");

  require(c.n >= 1 && c.m >= 1, "grid needs n >= 1 and m >= 1");
  require(c.ell > 0.0 && std::isfinite(c.ell), "grid side ell must be positive");
  if (std::pow(static_cast<double>(c.m), c.n) > static_cast<double>(kMaxGridCells)) {
    throw Error(ErrorCode::kSizeLimit, "m^n = " + std::to_string(c.m) + "^" + std::to_string(c.n) + " exceeds 2^24 cells");
  }
  require(c.samples >= 1000, "Monte Carlo needs N >= 1000");
  require(c.tolerance.rel >= 0.0 && c.tolerance.abs >= 0.0, "tolerances must be nonnegative");
  require(c.threads >= 1, "threads must be at least 1");
  require(s.pairs_1d >= 0 && s.knothe_pairs >= 0 && s.tire_pairs >= 0 && s.test_functions >= 0,
          "suite sizes must be nonnegative");
  require(s.m_1d >= 4 && s.m_1d <= (1 << 20), "suite.m_1d must lie in [4, 2^20]");
  require(s.sandwich_subdivisions >= 1 && s.sandwich_subdivisions <= 8, "suite.sandwich_subdivisions must lie in [1, 8]");
  require(s.pushforward_n >= 1000, "suite.pushforward_N must be at least 1000");
  require(s.t_count >= 1, "suite.t_count must be positive");
  for (int d : s.concentration_dims) {
    require(d >= 1 && d <= 24, "concentration dimensions must lie in [1, 24]");
  }
  for (int n : s.counterexample_ns) {
    require(n >= 64, "counterexample dimensions must be at least 64");
  }
  return c;
}

}  // namespace cube_transport::cli
