#pragma once

// Shared between the compilation units that persist artifacts; not part of
// the public headers so nlohmann stays out of the include surface.

#include <json.hpp>

#include "persim/forest.hpp"

namespace persim {

nlohmann::json forest_config_to_json(const ForestConfig& config);
ForestConfig forest_config_from_json(const nlohmann::json& doc);

}  // namespace persim
