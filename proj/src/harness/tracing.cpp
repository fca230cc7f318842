#include <artheater/harness/tracing.hpp>

#include <artheater/geometry/obj.hpp>
#include <artheater/geometry/scene_io.hpp>

#include <set>

namespace artheater::harness {

namespace {

using nlohmann::json;

Vec2 vec2(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(where + ": expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw ConfigError(where + ": unknown field '" + item.key() + "'");
  }
}

}  // namespace

TraceJob parse_trace_job(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j,
                 {"version", "name", "floorplan", "pixels_per_meter", "units", "wall_height", "bounds", "anchor",
                  "segments"},
                 "trace config");
  TraceJob job;
  job.base_dir = base_dir;
  try {
    if (j.at("version").get<int>() != 1) throw ConfigError("unsupported trace config version");
    job.name = j.at("name").get<std::string>();
    job.floorplan = j.value("floorplan", "");
    job.pixels_per_meter = j.value("pixels_per_meter", 1.0);
    const std::string units = j.value("units", "m");
    if (units != "m" && units != "px") throw ConfigError("units must be \"m\" or \"px\"");
    job.pixel_units = units == "px";
    job.wall_height = j.value("wall_height", job.wall_height);
    if (j.contains("bounds")) {
      reject_unknown(j["bounds"], {"min", "max"}, "bounds");
      job.bounds = Box2{vec2(j["bounds"].at("min"), "bounds.min"), vec2(j["bounds"].at("max"), "bounds.max")};
    }
    if (j.contains("anchor")) {
      const auto& a = j["anchor"];
      reject_unknown(a, {"translation", "rotation", "uniform_scale"}, "anchor");
      if (a.contains("translation")) {
        const auto& t = a["translation"];
        job.anchor.translation = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
      }
      job.anchor.rotation = a.value("rotation", 0.0);
      job.anchor.uniform_scale = a.value("uniform_scale", 1.0);
    }
    for (const auto& s : j.at("segments")) {
      reject_unknown(s, {"a", "b", "mode"}, "segment");
      TracedLine line{vec2(s.at("a"), "segment.a"), vec2(s.at("b"), "segment.b"), geometry::TraceMode::Wall};
      const std::string mode = s.value("mode", "Wall");
      if (mode == "Object") {
        line.mode = geometry::TraceMode::Object;
      } else if (mode != "Wall") {
        throw ConfigError("segment mode must be Wall or Object");
      }
      job.segments.push_back(line);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("trace config: ") + e.what());
  }
  if (job.name.empty()) throw ConfigError("trace config: empty name");
  if (!(job.pixels_per_meter > 0.0)) throw ConfigError("pixels_per_meter must be positive");
  if (!(job.wall_height > 0.0)) throw ConfigError("wall_height must be positive");
  if (!(job.anchor.uniform_scale > 0.0)) throw ConfigError("anchor.uniform_scale must be positive");
  if (job.pixel_units && job.floorplan.empty()) throw ConfigError("pixel units need a floorplan image");
  if (job.segments.empty()) throw ConfigError("trace config has no segments");
  if (!job.floorplan.empty()) {
    const std::filesystem::path p(job.floorplan);
    if (!std::filesystem::is_regular_file(p.is_absolute() ? p : base_dir / p)) {
      throw SceneLoadError("floorplan not found: " + job.floorplan);
    }
  }
  return job;
}

TraceJob load_trace_job(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception&) {
    throw ConfigError("cannot open config " + path.string());
  }
  try {
    return parse_trace_job(json::parse(text), path.parent_path());
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json trace_job_to_json(const TraceJob& job) {
  json segs = json::array();
  for (const auto& s : job.segments) {
    segs.push_back({{"a", {s.a.x(), s.a.y()}},
                    {"b", {s.b.x(), s.b.y()}},
                    {"mode", s.mode == geometry::TraceMode::Wall ? "Wall" : "Object"}});
  }
  json j = {{"version", 1},
            {"name", job.name},
            {"pixels_per_meter", job.pixels_per_meter},
            {"units", job.pixel_units ? "px" : "m"},
            {"wall_height", job.wall_height},
            {"anchor",
             {{"translation", {job.anchor.translation.x(), job.anchor.translation.y(), job.anchor.translation.z()}},
              {"rotation", job.anchor.rotation},
              {"uniform_scale", job.anchor.uniform_scale}}},
            {"segments", segs}};
  if (!job.floorplan.empty()) j["floorplan"] = job.floorplan;
  if (job.bounds) j["bounds"] = {{"min", {job.bounds->min.x(), job.bounds->min.y()}}, {"max", {job.bounds->max.x(), job.bounds->max.y()}}};
  return j;
}

std::vector<Artifact> run_trace_job(const TraceJob& job) {
  try {
    std::optional<geometry::FloorPlanImage> image;
    if (!job.floorplan.empty()) {
      const std::filesystem::path p(job.floorplan);
      const std::string bytes = read_file(p.is_absolute() ? p : job.base_dir / p);
      image = geometry::load_floorplan(
          std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()),
          job.pixels_per_meter);
    }
    auto to_world = [&](const Vec2& v) { return job.pixel_units ? image->pixel_to_world(v.x(), v.y()) : v; };

    geometry::SceneDocument doc;
    doc.wall_height = job.wall_height;
    doc.anchor = job.anchor;
    doc.bounds = job.bounds;
    if (!doc.bounds && image) doc.bounds = Box2{Vec2::Zero(), {image->width_m(), image->height_m()}};
    for (const auto& s : job.segments) doc.graph = geometry::trace_segment(std::move(doc.graph), to_world(s.a), to_world(s.b), s.mode);

    const auto scene = geometry::build_scene(doc);
    const auto meshes = geometry::extrude(doc.graph, doc.wall_height);
    json stats = {{"joints", doc.graph.joints.size()},
                  {"segments", doc.graph.segments.size()},
                  {"meshes", meshes.size()},
                  {"bounds", {{"min", {scene.bounds.min.x(), scene.bounds.min.y()}}, {"max", {scene.bounds.max.x(), scene.bounds.max.y()}}}}};
    if (image) stats["floorplan"] = {{"width_px", image->width_px}, {"height_px", image->height_px}};
    return {{"scene.json", geometry::scene_to_json(doc, scene).dump(2) + "\n"},
            {"scene.obj", geometry::export_obj(meshes)},
            {"summary.json", stats.dump(2) + "\n"}};
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw SceneLoadError(e.what());
  }
}

}  // namespace artheater::harness
