#pragma once

// Digital-twin geometry: floorplan raster, operator-traced line graph,
// extrusion into meshes, the anchor alignment transform, and the scene
// queries (raycast, line of sight, walkability) the simulations run on.

#include <artheater/core.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace artheater::geometry {

ARTHEATER_DEFINE_ERROR(DecodeError);
ARTHEATER_DEFINE_ERROR(ScaleError);
ARTHEATER_DEFINE_ERROR(DegenerateSegment);
ARTHEATER_DEFINE_ERROR(UnknownJoint);
ARTHEATER_DEFINE_ERROR(OpenObjectLoop);
ARTHEATER_DEFINE_ERROR(InvalidDirection);
ARTHEATER_DEFINE_ERROR(OutOfBounds);
ARTHEATER_DEFINE_ERROR(InvalidScene);

inline constexpr double kSnapTolerance = 0.02;     // m
inline constexpr double kOccupiedLuminance = 0.5;  // below this a pixel is "occupied"

struct FloorPlanImage {
  int width_px = 0;
  int height_px = 0;
  std::vector<float> luminance;  // row-major, [0, 1], row 0 is the top of the image
  double pixels_per_meter = 1.0;

  double width_m() const { return width_px / pixels_per_meter; }
  double height_m() const { return height_px / pixels_per_meter; }
  float at(int x, int y) const { return luminance[static_cast<std::size_t>(y) * width_px + x]; }
  bool occupied(int x, int y) const { return at(x, y) < kOccupiedLuminance; }

  /// Pixel (column, row) to floor coordinates; image rows grow downward, y grows up.
  Vec2 pixel_to_world(double px, double py) const {
    return {px / pixels_per_meter, (height_px - py) / pixels_per_meter};
  }
};

FloorPlanImage load_floorplan(std::span<const std::uint8_t> bytes, double pixels_per_meter);

enum class TraceMode { Wall, Object };

struct TraceSegment {
  int a = 0;
  int b = 0;
  TraceMode mode = TraceMode::Wall;
};

struct TraceGraph {
  std::vector<Vec2> joints;
  std::vector<TraceSegment> segments;
};

TraceGraph trace_segment(TraceGraph graph, const Vec2& a, const Vec2& b, TraceMode mode,
                         double snap_tolerance = kSnapTolerance);
TraceGraph move_joint(TraceGraph graph, int joint_id, const Vec2& new_pos);

struct ExtrudedMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  TraceMode source = TraceMode::Wall;
  double height = 0.0;
};

/// Object loops of the graph as counter-clockwise rings, in order of their
/// lowest segment index. Throws OpenObjectLoop when Object segments do not
/// decompose into simple closed loops.
std::vector<std::vector<Vec2>> object_loops(const TraceGraph& graph);

std::vector<ExtrudedMesh> extrude(const TraceGraph& graph, double wall_height);

double mesh_signed_volume(const ExtrudedMesh& mesh);
double mesh_surface_area(const ExtrudedMesh& mesh);
/// Every undirected edge used by exactly two faces, with opposite orientation.
bool is_watertight(const ExtrudedMesh& mesh);

struct AnchorTransform {
  Vec3 translation = Vec3::Zero();
  double rotation = 0.0;  // yaw
  double uniform_scale = 1.0;

  AnchorTransform inverse() const;
};

Vec3 apply_anchor(const AnchorTransform& t, const Vec3& p);

struct Edge {
  Vec2 a;
  Vec2 b;
};

struct WalkablePolygon {
  std::vector<Vec2> outer;               // counter-clockwise
  std::vector<std::vector<Vec2>> holes;  // obstacle footprints, counter-clockwise
};

struct OcclusionScene {
  std::vector<ExtrudedMesh> meshes;
  WalkablePolygon walkable;
  Box2 bounds;
  std::vector<Edge> edges;  // wall segments followed by obstacle footprint edges
  AnchorTransform anchor;
};

/// Builds a scene from a traced graph. Bounds default to the joints' bounding
/// box; walkable = bounds minus obstacle footprints.
OcclusionScene build_scene(const TraceGraph& graph, double wall_height,
                           std::optional<Box2> bounds = std::nullopt);

std::optional<double> raycast(const OcclusionScene& scene, const Vec2& origin, const Vec2& direction,
                              double max_range);
bool line_of_sight(const OcclusionScene& scene, const Vec2& a, const Vec2& b);
bool point_in_walkable(const OcclusionScene& scene, const Vec2& p);
/// Distance from p to the closest wall or footprint edge (infinity without edges).
double nearest_edge_distance(const OcclusionScene& scene, const Vec2& p);

}  // namespace artheater::geometry
