#pragma once

#include <artheater/geometry/twin.hpp>
#include <artheater/harness/bundle.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace artheater::harness {

struct TracedLine {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  geometry::TraceMode mode = geometry::TraceMode::Wall;
};

/// Input of the `trace` subcommand: line segments traced over an optional
/// floorplan image, in meters or in image pixels.
///
///   { "version": 1, "name": "gallery", "floorplan": "plan.png", "pixels_per_meter": 50,
///     "units": "m" | "px", "wall_height": 2.5, "bounds": {"min": [x, y], "max": [x, y]},
///     "anchor": {"translation": [x, y, z], "rotation": r, "uniform_scale": s},
///     "segments": [{"a": [x, y], "b": [x, y], "mode": "Wall" | "Object"}, ...] }
struct TraceJob {
  std::string name;
  std::string floorplan;
  double pixels_per_meter = 1.0;
  bool pixel_units = false;
  double wall_height = 2.5;
  std::optional<Box2> bounds;
  geometry::AnchorTransform anchor;
  std::vector<TracedLine> segments;
  std::filesystem::path base_dir;
};

TraceJob parse_trace_job(const nlohmann::json& j, const std::filesystem::path& base_dir);
TraceJob load_trace_job(const std::filesystem::path& path);
nlohmann::json trace_job_to_json(const TraceJob& job);

/// scene.json (the scene document) and scene.obj. Geometry and image
/// failures come back as SceneLoadError.
std::vector<Artifact> run_trace_job(const TraceJob& job);

}  // namespace artheater::harness
