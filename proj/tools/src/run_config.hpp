#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cube_transport/density.hpp"
#include "cube_transport/verification.hpp"

namespace cube_transport::cli {

enum class Command { kDensityCheck, kVerify1d, kVerifyKnothe, kTire, kConcentration, kCounterexample, kAll };

std::string to_string(Command c);
Command command_from_string(const std::string& s);

inline constexpr std::uint64_t kDefaultSeed = 12345;

/// Sizes of the built-in suites.
struct SuiteSizes {
  int pairs_1d = 50;
  int m_1d = 256;
  int knothe_pairs = 20;
  int tire_pairs = 10;
  int sandwich_subdivisions = 2;
  std::size_t pushforward_n = 100000;
  std::vector<int> concentration_dims{2, 4, 8};
  int t_count = 20;
  int test_functions = 20;
  std::vector<int> counterexample_ns{256, 1024, 4096};
};

struct RunConfig {
  Command command = Command::kAll;
  std::optional<DensitySpec> source;
  std::optional<DensitySpec> target;
  int n = 2;
  int m = 64;
  double ell = 1.0;
  Tolerance tolerance;
  std::size_t samples = 1000000;
  std::uint64_t seed = kDefaultSeed;
  std::filesystem::path output_dir = "cube_transport_out";
  bool plot = false;
  int threads = 1;
  SuiteSizes suite;
};

/// Defaults for every field, as a JSON document.
nlohmann::json default_config_json();

/// Reads a config document (missing fields keep their defaults) and checks
/// the invariants m^n <= 2^24, N >= 10^3. Throws Error(kInvalidSpec or
/// kSizeLimit).
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

/// Seed from CUBE_TRANSPORT_SEED when set, else kDefaultSeed.
std::uint64_t default_seed();

}  // namespace cube_transport::cli
