#pragma once

// nlohmann/json conversions shared by the .cpp files. Not installed.

#include <json.hpp>

#include "pedcloud/errors.hpp"
#include "pedcloud/types.hpp"

namespace pedcloud::detail {

using json = nlohmann::json;

json box_to_json(const Box2D& box);
Box2D box_from_json(const json& j);

json entry_to_json(const ManifestEntry& entry);
ManifestEntry entry_from_json(const json& j);

json points_to_json(const std::vector<Point3>& points);

double require_number(const json& j, const char* key);
std::string require_string(const json& j, const char* key);

}  // namespace pedcloud::detail
