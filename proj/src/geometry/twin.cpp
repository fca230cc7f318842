#include <artheater/geometry/primitives.hpp>
#include <artheater/geometry/twin.hpp>

#include <png.h>

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace artheater::geometry {

FloorPlanImage load_floorplan(std::span<const std::uint8_t> bytes, double pixels_per_meter) {
  if (!(pixels_per_meter > 0.0) || !std::isfinite(pixels_per_meter)) {
    throw ScaleError("pixels_per_meter must be positive, got " + std::to_string(pixels_per_meter));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
    throw DecodeError(image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> gray(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, gray.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError(msg);
  }

  FloorPlanImage out;
  out.width_px = static_cast<int>(image.width);
  out.height_px = static_cast<int>(image.height);
  out.pixels_per_meter = pixels_per_meter;
  out.luminance.resize(gray.size());
  std::transform(gray.begin(), gray.end(), out.luminance.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return out;
}

namespace {

int find_or_add_joint(TraceGraph& g, const Vec2& p, double tol) {
  int best = -1;
  double best_d = tol;
  for (std::size_t i = 0; i < g.joints.size(); ++i) {
    const double d = (g.joints[i] - p).norm();
    if (d <= best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  if (best >= 0) return best;
  g.joints.push_back(p);
  return static_cast<int>(g.joints.size()) - 1;
}

}  // namespace

TraceGraph trace_segment(TraceGraph graph, const Vec2& a, const Vec2& b, TraceMode mode,
                         double snap_tolerance) {
  if ((a - b).norm() <= snap_tolerance) throw DegenerateSegment("segment endpoints coincide");
  const int ia = find_or_add_joint(graph, a, snap_tolerance);
  const int ib = find_or_add_joint(graph, b, snap_tolerance);
  if (ia == ib) throw DegenerateSegment("both endpoints snap to joint " + std::to_string(ia));
  graph.segments.push_back({ia, ib, mode});
  return graph;
}

TraceGraph move_joint(TraceGraph graph, int joint_id, const Vec2& new_pos) {
  if (joint_id < 0 || joint_id >= static_cast<int>(graph.joints.size())) {
    throw UnknownJoint("joint " + std::to_string(joint_id));
  }
  graph.joints[static_cast<std::size_t>(joint_id)] = new_pos;
  return graph;
}

std::vector<std::vector<Vec2>> object_loops(const TraceGraph& graph) {
  std::map<int, std::vector<int>> incident;  // joint -> object segment ids
  for (std::size_t s = 0; s < graph.segments.size(); ++s) {
    const auto& seg = graph.segments[s];
    if (seg.mode != TraceMode::Object) continue;
    if (seg.a == seg.b || (graph.joints[seg.a] - graph.joints[seg.b]).norm() <= 0.0) {
      throw OpenObjectLoop("zero-length object segment " + std::to_string(s));
    }
    incident[seg.a].push_back(static_cast<int>(s));
    incident[seg.b].push_back(static_cast<int>(s));
  }
  for (const auto& [joint, segs] : incident) {
    if (segs.size() != 2) {
      throw OpenObjectLoop("joint " + std::to_string(joint) + " has " + std::to_string(segs.size()) +
                           " object segments, expected 2");
    }
  }

  std::vector<std::vector<Vec2>> loops;
  std::set<int> used;
  for (std::size_t s0 = 0; s0 < graph.segments.size(); ++s0) {
    if (graph.segments[s0].mode != TraceMode::Object || used.count(static_cast<int>(s0))) continue;
    std::vector<Vec2> ring;
    int seg = static_cast<int>(s0);
    const int start = graph.segments[s0].a;
    int at = start;
    do {
      used.insert(seg);
      ring.push_back(graph.joints[at]);
      const auto& sd = graph.segments[seg];
      at = sd.a == at ? sd.b : sd.a;
      const auto& next = incident[at];
      seg = next[0] == seg ? next[1] : next[0];
    } while (at != start);

    const double area = signed_area<double>(std::span<const Vec2>(ring));
    if (std::abs(area) < 1e-12) throw OpenObjectLoop("object loop has zero area");
    if (area < 0) std::reverse(ring.begin(), ring.end());
    if (!is_simple<double>(std::span<const Vec2>(ring))) throw OpenObjectLoop("object loop self-intersects");
    loops.push_back(std::move(ring));
  }
  return loops;
}

namespace {

ExtrudedMesh extrude_wall(const Vec2& a, const Vec2& b, double h) {
  ExtrudedMesh m;
  m.source = TraceMode::Wall;
  m.height = h;
  m.vertices = {{a.x(), a.y(), 0.0}, {b.x(), b.y(), 0.0}, {b.x(), b.y(), h}, {a.x(), a.y(), h}};
  // Front face normal points to the right of a->b.
  m.faces = {{0, 2, 1}, {0, 3, 2}};
  return m;
}

ExtrudedMesh extrude_prism(const std::vector<Vec2>& ring, double h) {
  ExtrudedMesh m;
  m.source = TraceMode::Object;
  m.height = h;
  const int n = static_cast<int>(ring.size());
  for (const auto& p : ring) m.vertices.emplace_back(p.x(), p.y(), 0.0);
  for (const auto& p : ring) m.vertices.emplace_back(p.x(), p.y(), h);

  const auto tris = triangulate<double>(std::span<const Vec2>(ring));
  if (tris.size() != ring.size() - 2) throw OpenObjectLoop("object loop could not be triangulated");
  for (const auto& t : tris) {
    m.faces.push_back({t[0], t[2], t[1]});              // floor cap faces down
    m.faces.push_back({t[0] + n, t[1] + n, t[2] + n});  // roof cap faces up
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    // Ring is counter-clockwise, so outward is to the right of i->j.
    m.faces.push_back({i, j, j + n});
    m.faces.push_back({i, j + n, i + n});
  }
  return m;
}

}  // namespace

std::vector<ExtrudedMesh> extrude(const TraceGraph& graph, double wall_height) {
  if (!(wall_height > 0.0)) throw ScaleError("wall height must be positive");
  std::vector<ExtrudedMesh> meshes;
  for (const auto& seg : graph.segments) {
    if (seg.mode != TraceMode::Wall) continue;
    meshes.push_back(extrude_wall(graph.joints[seg.a], graph.joints[seg.b], wall_height));
  }
  for (const auto& ring : object_loops(graph)) meshes.push_back(extrude_prism(ring, wall_height));
  return meshes;
}

double mesh_signed_volume(const ExtrudedMesh& mesh) {
  double six_v = 0.0;
  for (const auto& f : mesh.faces) {
    six_v += mesh.vertices[f[0]].dot(mesh.vertices[f[1]].cross(mesh.vertices[f[2]]));
  }
  return six_v / 6.0;
}

double mesh_surface_area(const ExtrudedMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    area += 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
  }
  return area;
}

bool is_watertight(const ExtrudedMesh& mesh) {
  std::map<std::pair<int, int>, int> directed;
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) ++directed[{f[k], f[(k + 1) % 3]}];
  }
  for (const auto& [e, count] : directed) {
    if (count != 1) return false;
    auto it = directed.find({e.second, e.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

AnchorTransform AnchorTransform::inverse() const {
  AnchorTransform inv;
  inv.uniform_scale = 1.0 / uniform_scale;
  inv.rotation = -rotation;
  const double c = std::cos(-rotation), s = std::sin(-rotation);
  const Vec3 rt(c * translation.x() - s * translation.y(), s * translation.x() + c * translation.y(),
                translation.z());
  inv.translation = -rt / uniform_scale;
  return inv;
}

Vec3 apply_anchor(const AnchorTransform& t, const Vec3& p) {
  const double c = std::cos(t.rotation), s = std::sin(t.rotation);
  const Vec3 r(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z());
  return t.uniform_scale * r + t.translation;
}

OcclusionScene build_scene(const TraceGraph& graph, double wall_height, std::optional<Box2> bounds) {
  OcclusionScene scene;
  scene.meshes = extrude(graph, wall_height);

  if (bounds) {
    scene.bounds = *bounds;
  } else {
    if (graph.joints.empty()) throw InvalidScene("scene has no joints and no bounds");
    Vec2 lo = graph.joints.front(), hi = graph.joints.front();
    for (const auto& j : graph.joints) {
      lo = lo.cwiseMin(j);
      hi = hi.cwiseMax(j);
    }
    scene.bounds = {lo, hi};
  }
  const Box2& b = scene.bounds;
  if (!(b.max.x() > b.min.x() && b.max.y() > b.min.y())) throw InvalidScene("bounds have zero area");

  scene.walkable.outer = {b.min, {b.max.x(), b.min.y()}, b.max, {b.min.x(), b.max.y()}};
  for (const auto& seg : graph.segments) {
    if (seg.mode == TraceMode::Wall) scene.edges.push_back({graph.joints[seg.a], graph.joints[seg.b]});
  }
  for (auto& ring : object_loops(graph)) {
    for (const auto& p : ring) {
      if (!b.contains(p)) throw InvalidScene("obstacle footprint leaves the scene bounds");
    }
    for (std::size_t i = 0; i < ring.size(); ++i) scene.edges.push_back({ring[i], ring[(i + 1) % ring.size()]});
    scene.walkable.holes.push_back(std::move(ring));
  }
  return scene;
}

std::optional<double> raycast(const OcclusionScene& scene, const Vec2& origin, const Vec2& direction,
                              double max_range) {
  if (std::abs(direction.norm() - 1.0) > 1e-6) throw InvalidDirection("direction must be a unit vector");
  std::optional<double> best;
  for (const auto& e : scene.edges) {
    const auto t = ray_segment_hit<double>(origin, direction, e.a, e.b);
    if (t && *t <= max_range && (!best || *t < *best)) best = t;
  }
  return best;
}

bool line_of_sight(const OcclusionScene& scene, const Vec2& a, const Vec2& b) {
  if (!scene.bounds.contains(a) || !scene.bounds.contains(b)) throw OutOfBounds("line-of-sight endpoint");
  if (a == b) return true;
  return std::none_of(scene.edges.begin(), scene.edges.end(),
                      [&](const Edge& e) { return segments_intersect<double>(a, b, e.a, e.b); });
}

bool point_in_walkable(const OcclusionScene& scene, const Vec2& p) {
  if (winding_number<double>(std::span<const Vec2>(scene.walkable.outer), p) == 0) return false;
  for (const auto& hole : scene.walkable.holes) {
    if (winding_number<double>(std::span<const Vec2>(hole), p) != 0) return false;
  }
  return true;
}

double nearest_edge_distance(const OcclusionScene& scene, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : scene.edges) best = std::min(best, point_segment_distance<double>(p, e.a, e.b));
  return best;
}

}  // namespace artheater::geometry
