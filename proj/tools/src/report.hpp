#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "run_config.hpp"
#include "suites.hpp"

namespace cube_transport::cli {

/// report.json document: timestamp, environment, config echo, reports and
/// diagnostics. Everything except "timestamp" is a function of the config.
nlohmann::json report_document(const SuiteOutput& out, const RunConfig& c, const std::string& timestamp);

/// Writes report.json and report.csv into `dir` (created if missing), one
/// CSV and optionally one SVG per concentration profile, and scaling.csv when
/// a scaling table exists. Throws Error(kIo) if `dir` is unwritable.
void emit_report(const SuiteOutput& out, const RunConfig& c, const std::filesystem::path& dir);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Lowercase alphanumerics and '-', everything else mapped to '_'.
std::string file_slug(const std::string& name);

}  // namespace cube_transport::cli
