#pragma once

#include <artheater/geometry/twin.hpp>

#include <nlohmann/json.hpp>

namespace artheater::geometry {

/// Scene description, schema version 1:
///
///   { "version": 1,
///     "wall_height": 2.5,
///     "joints":   [[x, y], ...],
///     "segments": [{"a": 0, "b": 1, "mode": "Wall" | "Object"}, ...],
///     "bounds":   {"min": [x, y], "max": [x, y]},            (optional on input)
///     "walkable": {"outer": [[x, y], ...], "holes": [[[x, y], ...], ...]},  (output only)
///     "anchor":   {"translation": [x, y, z], "rotation": r, "uniform_scale": s} }
///
/// Reading rebuilds the scene from the graph; `walkable` is derived, so it is
/// ignored on input.
struct SceneDocument {
  TraceGraph graph;
  double wall_height = 2.5;
  std::optional<Box2> bounds;
  AnchorTransform anchor;
};

nlohmann::json scene_to_json(const SceneDocument& doc, const OcclusionScene& scene);
SceneDocument scene_document_from_json(const nlohmann::json& j);
OcclusionScene build_scene(const SceneDocument& doc);

}  // namespace artheater::geometry
