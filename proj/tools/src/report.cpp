#include "report.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <system_error>

#include "cube_transport/error.hpp"

namespace cube_transport::cli {

namespace {

constexpr const char* kLibraryVersion = "0.1.0";

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_slug(const std::string& name) {
  std::string out;
  for (char ch : name) {
    const auto u = static_cast<unsigned char>(ch);
    out += std::isalnum(u) || ch == '-' || ch == '.' ? static_cast<char>(std::tolower(u)) : '_';
  }
  return out;
}

nlohmann::json report_document(const SuiteOutput& out, const RunConfig& c, const std::string& timestamp) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : out.reports) {
    reports.push_back(to_json(r));
  }
  nlohmann::json profiles = nlohmann::json::object();
  for (const auto& p : out.profiles) {
    profiles[p.name] = to_json(p.profile);
  }
  nlohmann::json doc;
  doc["timestamp"] = timestamp;
  doc["environment"] = {{"library_version", kLibraryVersion},
                        {"compiler", __VERSION__},
                        {"cxx_standard", static_cast<long>(__cplusplus)}};
  doc["config"] = to_json(c);
  doc["reports"] = std::move(reports);
  doc["diagnostics"] = out.diagnostics;
  doc["profiles"] = std::move(profiles);
  doc["summary"] = {{"checks", out.reports.size()},
                    {"failed", std::count_if(out.reports.begin(), out.reports.end(),
                                             [](const VerificationReport& r) { return !r.pass; })}};
  return doc;
}

void emit_report(const SuiteOutput& out, const RunConfig& c, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
  }
  write_text(dir / "report.json", report_document(out, c, utc_timestamp()).dump(2) + "\n");
  write_reports_csv(out.reports, dir / "report.csv");
  for (const auto& p : out.profiles) {
    const std::string stem = "profile_" + file_slug(p.name);
    write_profile_csv(p.profile, dir / (stem + ".csv"));
    if (c.plot) {
      write_profile_svg(p.profile, p.name, dir / (stem + ".svg"));
    }
  }
  if (out.scaling) {
    write_scaling_csv(*out.scaling, dir / "scaling.csv");
  }
}

}  // namespace cube_transport::cli
