#include "cube_transport/verification.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cube_transport/error.hpp"

namespace cube_transport {

VerificationReport make_report(std::string name, std::string tag, double lhs, double rhs,
                               double constant_used, int grid_m, Tolerance tol) {
  VerificationReport r;
  r.name = std::move(name);
  r.tag = std::move(tag);
  r.lhs = lhs;
  r.rhs = rhs;
  r.constant_used = constant_used;
  r.slack = rhs - lhs;
  r.pass = lhs <= rhs * (1.0 + tol.rel) + tol.abs;
  r.grid_m = grid_m;
  r.rel_tol = tol.rel;
  r.abs_tol = tol.abs;
  return r;
}

nlohmann::json to_json(const VerificationReport& r) {
  return {{"name", r.name},   {"tag", r.tag},         {"lhs", r.lhs},
          {"rhs", r.rhs},     {"constant", r.constant_used}, {"slack", r.slack},
          {"pass", r.pass},   {"m", r.grid_m},        {"rel_tol", r.rel_tol},
          {"abs_tol", r.abs_tol}};
}

std::string csv_header() { return "name,lhs,rhs,constant,slack,pass,m"; }

std::string csv_row(const VerificationReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.name << ',' << r.lhs << ',' << r.rhs << ',' << r.constant_used << ',' << r.slack << ','
      << (r.pass ? "true" : "false") << ',' << r.grid_m;
  return out.str();
}

void write_reports_csv(std::span<const VerificationReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out << csv_header() << '\n';
  for (const auto& r : reports) {
    out << csv_row(r) << '\n';
  }
}

bool all_pass(std::span<const VerificationReport> reports) {
  return std::all_of(reports.begin(), reports.end(), [](const VerificationReport& r) { return r.pass; });
}

}  // namespace cube_transport
