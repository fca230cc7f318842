#pragma once

#include <artheater/core.hpp>
#include <artheater/trace.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace artheater::distortion {

ARTHEATER_DEFINE_ERROR(InvalidProgress);
ARTHEATER_DEFINE_ERROR(OutOfRange);
ARTHEATER_DEFINE_ERROR(EmptyWindow);
ARTHEATER_DEFINE_ERROR(TooFewSamples);
ARTHEATER_DEFINE_ERROR(TreatmentConfigError);
ARTHEATER_DEFINE_ERROR(InvalidTimeStep);

/// Physical room, centered on the origin in plan with the floor at z = 0.
struct RoomModel {
  double width = 4.5;   // along x
  double length = 5.5;  // along y
  double height = 2.5;
  double tile = 0.65;
  double reference_volume = 56.82;  // nominal virtual-room volume, m^3

  void validate() const;
  Vec2 center() const { return Vec2::Zero(); }
  /// Unit vector along the room's smaller horizontal dimension.
  Vec2 short_axis() const { return width <= length ? Vec2::UnitX() : Vec2::UnitY(); }
  Vec2 long_axis() const { return width <= length ? Vec2::UnitY() : Vec2::UnitX(); }
  double short_extent() const { return std::min(width, length); }
  double long_extent() const { return std::max(width, length); }
  Box2 floor() const { return {{-width / 2, -length / 2}, {width / 2, length / 2}}; }
  Box3 box() const { return {{-width / 2, -length / 2, 0.0}, {width / 2, length / 2, height}}; }
};

enum class TreatmentKind { Elongation, Warp, Shift, Elevation, Enlarge };

struct DistortionTreatment {
  TreatmentKind kind = TreatmentKind::Elongation;
  double elongation = 3.35;       // m the far short-axis wall recedes
  double warp_angle_deg = 160.0;  // total bend of the extended walls
  double warp_length = 19.33;     // arc length the bend is spread over
  double shift = 5.14;            // m of lateral wall travel
  double elevation = 8.07;        // m of vertical travel
  double enlarge_factor = 2.0;    // per-dimension scale at full extent

  void validate() const;
  double warp_curvature(double extent) const { return deg2rad(warp_angle_deg) * extent / warp_length; }
};

enum class Phase { Apply, Return, Hold };

const char* to_string(TreatmentKind k);
const char* to_string(Phase p);
TreatmentKind treatment_kind_from_string(const std::string& s);

/// Maps a physical point to its virtual position at distortion extent
/// `extent` in [0, 1]. Exactly the identity at extent 0.
Vec3 distort_point(const RoomModel& room, const DistortionTreatment& t, double extent, const Vec3& p);

/// Extent reached at `progress` through a phase: Apply ramps 0 to 1,
/// Return ramps 1 to 0.
double phase_extent(Phase phase, double progress);

struct RoomGeometry {
  std::vector<Vec3> vertices;

  Box3 bounds() const;
};

/// Lattice of points on the surface of the physical room box (walls, floor
/// and ceiling), `divisions` cells per edge.
RoomGeometry room_geometry(const RoomModel& room, int divisions = 12);

RoomGeometry treatment_geometry(const RoomModel& room, const DistortionTreatment& t, Phase phase, double progress,
                                int divisions = 12);

/// Bounding-box volume of the virtual room over that of the physical room.
double volume_ratio(const RoomModel& room, const DistortionTreatment& t, double extent);

/// Floor area of the virtual room: the plan Jacobian of the transform
/// integrated over the physical floor by Gauss-Legendre quadrature.
double virtual_floor_area(const RoomModel& room, const DistortionTreatment& t, double extent);

struct TimelineSegment {
  Phase phase = Phase::Apply;
  double duration = 10.0;
};

struct TreatmentTimeline {
  std::vector<TimelineSegment> segments;

  /// Apply 10, Hold 5, Return 10, Hold 5, twice: 60 s.
  static TreatmentTimeline standard();
  double total() const;
  void validate() const;
};

struct TimelineSample {
  Phase phase = Phase::Apply;
  double progress = 0.0;  // within the segment
  double extent = 0.0;    // distortion extent after applying the phase
  int segment = 0;
};

TimelineSample timeline_step(const TreatmentTimeline& timeline, double t);

struct StimulusWindow {
  int segment = 0;
  Phase phase = Phase::Apply;
  double t0 = 0.0;
  double t1 = 0.0;
};

/// The Apply and Return segments of a timeline as absolute windows.
std::vector<StimulusWindow> stimulus_windows(const TreatmentTimeline& timeline);

struct ParticleFieldConfig {
  double radius = 0.0192;
  double speed = 0.01;
  double density = 712.0 / 1000.0;  // particles per m^3
  double redirect_mean = 5.0;       // s between direction changes, exponential
};

struct FieldParticle {
  Vec3 position = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
};

struct ParticleField {
  ParticleFieldConfig config;
  std::vector<FieldParticle> particles;
  Rng rng;
};

int target_population(const Box3& bounds, const ParticleFieldConfig& config);

ParticleField make_particle_field(const Box3& bounds, const ParticleFieldConfig& config, std::uint64_t seed);

/// Moves every particle at constant speed, reflecting off `bounds` inset by
/// the particle radius, then adds or drops particles to match the density.
ParticleField particle_field_step(ParticleField field, const Box3& bounds, double dt);

double axis_movement(const LocomotionTrace& trace, const RoomModel& room, double t0, double t1);
double center_distance_change(const LocomotionTrace& trace, const RoomModel& room, double t0, double t1);
double total_walking_distance(const LocomotionTrace& trace);

struct SegmentMetrics {
  StimulusWindow window;
  double axis_displacement = 0.0;
  double center_change = 0.0;
};

struct TraceMetrics {
  std::vector<SegmentMetrics> segments;
  double total_walking_distance = 0.0;
};

TraceMetrics trace_metrics(const LocomotionTrace& trace, const RoomModel& room, const TreatmentTimeline& timeline);

std::string metrics_csv_header();
std::string metrics_csv_rows(const std::string& trace_id, const TraceMetrics& metrics);

struct DensityWindowSpec {
  double before_end = 2.0;
  double after_end = 2.0;
};

struct DensityMap {
  int cols = 0;  // along x
  int rows = 0;  // along y
  double tile = 0.65;
  Vec2 origin = Vec2::Zero();  // room min corner
  std::vector<std::uint64_t> counts;  // row-major, row 0 at min y
  std::vector<std::pair<double, double>> windows;

  std::uint64_t total() const;
  std::uint64_t at(int col, int row) const { return counts[static_cast<std::size_t>(row * cols + col)]; }
};

/// Grid of tile-sized cells covering the room floor; the last row/column is
/// partial when the room is not a whole number of tiles.
DensityMap empty_density_map(const RoomModel& room);

/// Counts the trace samples inside any window. Samples off the floor are
/// dropped.
DensityMap density_map(std::span<const LocomotionTrace> traces, const RoomModel& room,
                       std::vector<std::pair<double, double>> windows);

/// One window around the end of each Apply and Return phase.
std::vector<std::pair<double, double>> density_windows(const TreatmentTimeline& timeline,
                                                       const DensityWindowSpec& spec = {});

std::string density_to_pgm(const DensityMap& map);
nlohmann::json density_metadata(const DensityMap& map);

nlohmann::json treatment_to_json(const DistortionTreatment& t);
DistortionTreatment treatment_from_json(const nlohmann::json& j);
nlohmann::json timeline_to_json(const TreatmentTimeline& t);
TreatmentTimeline timeline_from_json(const nlohmann::json& j);

}  // namespace artheater::distortion
