#pragma once

// Scene files: JSON with keys
//   "name"      (optional string)
//   "junction"  list of [x, y] vertices, counter-clockwise
//   "obstacles" list of vertex lists, clockwise; a two-vertex list is a plate
//   "ends"      list of {"attach_edge_index", "width", "collar_length"}

#include "wavescat/geometry.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace wavescat {

/// Throws GeometryError on missing or mistyped keys.
WaveguideScene scene_from_json(const nlohmann::json &doc);
nlohmann::json scene_to_json(const WaveguideScene &scene);

/// Reads and parses a scene file. Parse errors surface as
/// nlohmann::json::parse_error; structural errors as GeometryError.
WaveguideScene load_scene(const std::string &path);

} // namespace wavescat
