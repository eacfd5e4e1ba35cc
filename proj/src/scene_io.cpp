#include "wavescat/scene_io.hpp"

#include "wavescat/errors.hpp"

#include <fstream>
#include <sstream>

namespace wavescat {

namespace {

Polygon polygon_from_json(const nlohmann::json &list, const std::string &what) {
  if (!list.is_array()) throw GeometryError(what + ": expected a vertex list");
  Polygon poly;
  for (const auto &v : list) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw GeometryError(what + ": vertices must be [x, y] number pairs");
    poly.vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  return poly;
}

nlohmann::json polygon_to_json(const Polygon &poly) {
  auto out = nlohmann::json::array();
  for (const auto &v : poly.vertices) out.push_back({v.x(), v.y()});
  return out;
}

} // namespace

WaveguideScene scene_from_json(const nlohmann::json &doc) {
  if (!doc.is_object()) throw GeometryError("scene: top level must be an object");
  if (!doc.contains("junction")) throw GeometryError("scene: missing key 'junction'");
  if (!doc.contains("ends")) throw GeometryError("scene: missing key 'ends'");
  Polygon junction = polygon_from_json(doc["junction"], "junction");
  std::vector<Polygon> obstacles;
  if (doc.contains("obstacles")) {
    if (!doc["obstacles"].is_array()) throw GeometryError("scene: 'obstacles' must be a list");
    for (std::size_t k = 0; k < doc["obstacles"].size(); ++k)
      obstacles.push_back(polygon_from_json(doc["obstacles"][k], "obstacle " + std::to_string(k)));
  }
  if (!doc["ends"].is_array()) throw GeometryError("scene: 'ends' must be a list");
  std::vector<EndSpec> ends;
  for (const auto &e : doc["ends"]) {
    if (!e.is_object() || !e.contains("attach_edge_index") || !e.contains("width"))
      throw GeometryError("scene: each end needs 'attach_edge_index' and 'width'");
    EndSpec spec;
    spec.attach_edge = e["attach_edge_index"].get<int>();
    spec.width = e["width"].get<double>();
    spec.collar_length = e.value("collar_length", 0.0);
    ends.push_back(spec);
  }
  return make_scene(doc.value("name", std::string("scene")), std::move(junction),
                    std::move(obstacles), ends);
}

nlohmann::json scene_to_json(const WaveguideScene &scene) {
  nlohmann::json doc;
  doc["name"] = scene.name;
  doc["junction"] = polygon_to_json(scene.junction);
  doc["obstacles"] = nlohmann::json::array();
  for (const auto &ob : scene.obstacles) doc["obstacles"].push_back(polygon_to_json(ob));
  doc["ends"] = nlohmann::json::array();
  for (const auto &end : scene.ends)
    doc["ends"].push_back({{"attach_edge_index", end.attach_edge},
                           {"width", end.cross_section.width},
                           {"collar_length", end.collar_length}});
  return doc;
}

WaveguideScene load_scene(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw GeometryError("cannot open scene file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return scene_from_json(nlohmann::json::parse(buf.str()));
}

} // namespace wavescat
