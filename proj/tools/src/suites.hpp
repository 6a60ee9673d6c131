#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cube_transport/concentration.hpp"
#include "cube_transport/verification.hpp"
#include "run_config.hpp"

namespace cube_transport::cli {

struct NamedProfile {
  std::string name;
  ConcentrationProfile profile;
};

/// Everything a command produces: checked inequalities, reported numbers,
/// concentration profiles and the counterexample table.
struct SuiteOutput {
  std::vector<VerificationReport> reports;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<NamedProfile> profiles;
  std::optional<ScalingTable> scaling;

  void append(SuiteOutput other);
};

SuiteOutput run_density_check(const RunConfig& c);
SuiteOutput run_verify_1d(const RunConfig& c);
SuiteOutput run_verify_knothe(const RunConfig& c);
SuiteOutput run_tire(const RunConfig& c);
SuiteOutput run_concentration(const RunConfig& c);
SuiteOutput run_counterexample(const RunConfig& c);

/// Dispatches on c.command; `all` runs every suite in order.
SuiteOutput run_suites(const RunConfig& c);

}  // namespace cube_transport::cli
