#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace cube_transport {

/// pass <=> lhs <= rhs * (1 + rel) + abs
struct Tolerance {
  double rel = 0.05;
  double abs = 1e-6;
};

/// One checked inequality lhs <= rhs.
struct VerificationReport {
  std::string name;
  /// Short citation tag of the inequality, e.g. "prop-2.1".
  std::string tag;
  double lhs = 0.0;
  double rhs = 0.0;
  double constant_used = 0.0;
  double slack = 0.0;
  bool pass = false;
  int grid_m = 0;
  double rel_tol = 0.0;
  double abs_tol = 0.0;
};

VerificationReport make_report(std::string name, std::string tag, double lhs, double rhs,
                               double constant_used, int grid_m, Tolerance tol);

nlohmann::json to_json(const VerificationReport& r);

/// name,lhs,rhs,constant,slack,pass,m
std::string csv_header();
std::string csv_row(const VerificationReport& r);
void write_reports_csv(std::span<const VerificationReport> reports, const std::filesystem::path& path);

bool all_pass(std::span<const VerificationReport> reports);

}  // namespace cube_transport
