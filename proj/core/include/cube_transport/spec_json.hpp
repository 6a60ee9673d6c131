#pragma once

#include <json.hpp>

#include "cube_transport/density.hpp"

namespace cube_transport {

/// {"variant": "<name>", ...parameters}
nlohmann::json density_spec_to_json(const DensitySpec& spec);

/// Inverse of density_spec_to_json; throws Error(kInvalidSpec) on bad input.
DensitySpec density_spec_from_json(const nlohmann::json& j);

}  // namespace cube_transport
