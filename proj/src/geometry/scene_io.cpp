#include <artheater/geometry/scene_io.hpp>

namespace artheater::geometry {

using nlohmann::json;

namespace {

json pt(const Vec2& p) { return json::array({p.x(), p.y()}); }

Vec2 read_pt(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidScene("expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json ring(const std::vector<Vec2>& r) {
  json a = json::array();
  for (const auto& p : r) a.push_back(pt(p));
  return a;
}

}  // namespace

json scene_to_json(const SceneDocument& doc, const OcclusionScene& scene) {
  json j;
  j["version"] = 1;
  j["wall_height"] = doc.wall_height;
  j["joints"] = ring(doc.graph.joints);
  j["segments"] = json::array();
  for (const auto& s : doc.graph.segments) {
    j["segments"].push_back({{"a", s.a}, {"b", s.b}, {"mode", s.mode == TraceMode::Wall ? "Wall" : "Object"}});
  }
  j["bounds"] = {{"min", pt(scene.bounds.min)}, {"max", pt(scene.bounds.max)}};
  json holes = json::array();
  for (const auto& h : scene.walkable.holes) holes.push_back(ring(h));
  j["walkable"] = {{"outer", ring(scene.walkable.outer)}, {"holes", holes}};
  const auto& a = doc.anchor;
  j["anchor"] = {{"translation", {a.translation.x(), a.translation.y(), a.translation.z()}},
                 {"rotation", a.rotation},
                 {"uniform_scale", a.uniform_scale}};
  return j;
}

SceneDocument scene_document_from_json(const json& j) {
  try {
    if (j.value("version", 0) != 1) throw InvalidScene("unsupported scene version");
    SceneDocument doc;
    doc.wall_height = j.value("wall_height", 2.5);
    for (const auto& p : j.at("joints")) doc.graph.joints.push_back(read_pt(p));
    for (const auto& s : j.at("segments")) {
      const std::string mode = s.at("mode").get<std::string>();
      if (mode != "Wall" && mode != "Object") throw InvalidScene("segment mode must be Wall or Object");
      TraceSegment seg{s.at("a").get<int>(), s.at("b").get<int>(),
                       mode == "Wall" ? TraceMode::Wall : TraceMode::Object};
      const int n = static_cast<int>(doc.graph.joints.size());
      if (seg.a < 0 || seg.b < 0 || seg.a >= n || seg.b >= n) throw InvalidScene("segment references unknown joint");
      if (seg.a == seg.b) throw InvalidScene("zero-length segment");
      doc.graph.segments.push_back(seg);
    }
    if (j.contains("bounds")) doc.bounds = Box2{read_pt(j["bounds"].at("min")), read_pt(j["bounds"].at("max"))};
    if (j.contains("anchor")) {
      const auto& a = j["anchor"];
      const auto& t = a.at("translation");
      doc.anchor.translation = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
      doc.anchor.rotation = a.value("rotation", 0.0);
      doc.anchor.uniform_scale = a.value("uniform_scale", 1.0);
      if (!(doc.anchor.uniform_scale > 0.0)) throw InvalidScene("anchor scale must be positive");
    }
    return doc;
  } catch (const json::exception& e) {
    throw InvalidScene(e.what());
  }
}

OcclusionScene build_scene(const SceneDocument& doc) {
  OcclusionScene scene = build_scene(doc.graph, doc.wall_height, doc.bounds);
  scene.anchor = doc.anchor;
  return scene;
}

}  // namespace artheater::geometry
