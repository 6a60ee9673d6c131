#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cube_transport/density.hpp"
#include "cube_transport/error.hpp"
#include "cube_transport/spec_json.hpp"

namespace cube_transport {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) {
    throw Error(ErrorCode::kInvalidSpec, std::string("missing field '") + name + "'");
  }
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("field '") + name + "': " + e.what());
  }
}

struct ToJson {
  json operator()(const RestrictedGaussian& g) const {
    return {{"variant", "restricted_gaussian"},
            {"center", g.center},
            {"inverse_covariance", g.inverse_covariance}};
  }
  json operator()(const ExponentialTilt& t) const { return {{"variant", "exponential_tilt"}, {"v", t.v}}; }
  json operator()(const ConvexPower& c) const {
    return {{"variant", "convex_power"}, {"b", c.b}, {"v", c.v}, {"p", c.p}};
  }
  json operator()(const Uniform&) const { return {{"variant", "uniform"}}; }
  json operator()(const CorrelatedGaussianRemark& r) const {
    return {{"variant", "correlated_gaussian_remark"}, {"n", r.n}, {"scale", r.scale}};
  }
  json operator()(const CustomGrid& c) const { return {{"variant", "custom_grid"}, {"values", c.values}}; }
};

}  // namespace

json density_spec_to_json(const DensitySpec& spec) { return std::visit(ToJson{}, spec); }

DensitySpec density_spec_from_json(const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kInvalidSpec, "density spec must be a JSON object");
  }
  const auto variant = field<std::string>(j, "variant");
  if (variant == "restricted_gaussian") {
    return RestrictedGaussian{field<std::vector<double>>(j, "center"),
                              field<std::vector<std::vector<double>>>(j, "inverse_covariance")};
  }
  if (variant == "exponential_tilt") {
    return ExponentialTilt{field<std::vector<double>>(j, "v")};
  }
  if (variant == "convex_power") {
    return ConvexPower{field<double>(j, "b"), field<std::vector<double>>(j, "v"), field<double>(j, "p")};
  }
  if (variant == "uniform") {
    return Uniform{};
  }
  if (variant == "correlated_gaussian_remark") {
    CorrelatedGaussianRemark r{field<int>(j, "n"), 0.0};
    if (j.contains("scale")) {
      r.scale = field<double>(j, "scale");
    }
    return r;
  }
  if (variant == "custom_grid") {
    return CustomGrid{field<std::vector<double>>(j, "values")};
  }
  throw Error(ErrorCode::kInvalidSpec, "unknown density variant '" + variant + "'");
}

std::filesystem::path write_grid_density(const GridDensity& d, const std::filesystem::path& stem,
                                         ValuesFormat format) {
  const Grid& g = d.grid();
  std::filesystem::path header = stem;
  header += ".json";
  std::filesystem::path values_path = stem;
  values_path += format == ValuesFormat::kCsv ? ".csv" : ".bin";

  if (format == ValuesFormat::kCsv) {
    std::ofstream out(values_path);
    if (!out) {
      throw Error(ErrorCode::kIo, "cannot write " + values_path.string());
    }
    out.precision(17);
    out << "value\n";
    for (double v : d.values()) {
      out << v << '\n';
    }
  } else {
    static_assert(std::endian::native == std::endian::little, "binary dumps assume little-endian");
    std::ofstream out(values_path, std::ios::binary);
    if (!out) {
      throw Error(ErrorCode::kIo, "cannot write " + values_path.string());
    }
    out.write(reinterpret_cast<const char*>(d.values().data()),
              static_cast<std::streamsize>(d.values().size_bytes()));
  }

  json j = {{"dim", g.dim()},
            {"m", g.cells_per_axis()},
            {"origin", std::vector<double>(g.origin().begin(), g.origin().end())},
            {"side", g.side()},
            {"format", format == ValuesFormat::kCsv ? "csv" : "binary"},
            {"values_file", values_path.filename().string()},
            {"total_mass", d.total_mass()}};
  std::ofstream out(header);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + header.string());
  }
  out << j.dump(2) << '\n';
  return header;
}

GridDensity read_grid_density(const std::filesystem::path& header) {
  std::ifstream in(header);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + header.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, header.string() + ": " + e.what());
  }
  Grid grid(field<int>(j, "dim"), field<int>(j, "m"), field<std::vector<double>>(j, "origin"),
            field<double>(j, "side"));
  const auto values_path = header.parent_path() / field<std::string>(j, "values_file");
  const auto format = field<std::string>(j, "format");
  std::vector<double> values;
  if (format == "csv") {
    std::ifstream vin(values_path);
    if (!vin) {
      throw Error(ErrorCode::kIo, "cannot read " + values_path.string());
    }
    std::string line;
    std::getline(vin, line);  // header row
    while (std::getline(vin, line)) {
      if (!line.empty()) {
        values.push_back(std::stod(line));
      }
    }
  } else if (format == "binary") {
    std::ifstream vin(values_path, std::ios::binary);
    if (!vin) {
      throw Error(ErrorCode::kIo, "cannot read " + values_path.string());
    }
    values.resize(grid.cell_count());
    vin.read(reinterpret_cast<char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (vin.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double))) {
      throw Error(ErrorCode::kIo, values_path.string() + " is truncated");
    }
  } else {
    throw Error(ErrorCode::kIo, "unknown values format '" + format + "'");
  }
  return GridDensity(std::move(grid), std::move(values));
}

}  // namespace cube_transport
