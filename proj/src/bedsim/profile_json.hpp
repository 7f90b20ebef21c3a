#pragma once

#include <json.hpp>

#include "bedsim/plant.hpp"

namespace bedsim {

BodyProfile profile_from_json(const nlohmann::json& doc);

}  // namespace bedsim
