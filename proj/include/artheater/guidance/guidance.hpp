#pragma once

#include <artheater/core.hpp>

#include <deque>
#include <span>
#include <string>
#include <vector>

namespace artheater::guidance {

/// Defaults for the drifting guide particles. Speed, noise, respawn region,
/// streak length and arrival radius are tuning values, not measured ones.
struct ParticleConfig {
  int count = 3;                        // 1..6
  double speed = 1.0;                   // m/s
  double noise_deg_per_sqrt_s = 15.0;   // direction diffusion
  double reset_interval = 1.0;          // s of particle age between exact re-aims
  double respawn_radius = 0.3;          // sphere radius around the spawn point
  double respawn_forward = 0.2;         // spawn point this far ahead of the head
  double streak_seconds = 0.5;
  double arrival_radius = 0.5;
  double max_age = 30.0;
};

struct StreakPoint {
  double t;
  Vec3 position;
};

struct Particle {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double age = 0.0;
  double until_reset = 1.0;
  Vec3 reset_direction = Vec3::UnitX();
  std::deque<StreakPoint> streak;
  // Bookkeeping for analysis: how many lives and re-aims this slot has seen,
  // and the distance to target recorded at the latest re-aim.
  int generation = 0;
  int reset_count = 0;
  double distance_at_last_reset = 0.0;
};

struct ParticleGuideState {
  ParticleConfig config;
  std::vector<Particle> particles;
  Vec3 target = Vec3::Zero();
  double clock = 0.0;
  Rng rng;
};

ParticleGuideState make_particle_guide(const Pose& head, const Vec3& target, const ParticleConfig& config,
                                       std::uint64_t seed);

ParticleGuideState particle_step(ParticleGuideState state, const Pose& head, const Vec3& target, double dt);

struct ArrowConfig {
  double distance = 2.0;  // ahead of the head, horizontally
  double height = 0.40;   // above the floor
  double fade_seconds = 1.0;
};

struct ArrowGuideState {
  Vec3 position = Vec3::Zero();
  Vec3 pointing = Vec3::UnitX();
  double opacity = 1.0;
};

ArrowGuideState arrow_pose(const ArrowGuideState& previous, const Pose& head, const Vec3& target,
                           bool performance_active, double dt, const ArrowConfig& config = {});

struct RadarBlip {
  Vec2 position;  // unit radar disc, walker heading is +y
  int target_index = 0;
};

struct RadarProjection {
  std::vector<RadarBlip> blips;
  double fov_half_angle = 0.0;
};

inline const double kDefaultRadarFovHalfAngle = deg2rad(17.5);

RadarProjection radar_project(const Pose& head, std::span<const Vec3> targets, double range,
                              double fov_half_angle = kDefaultRadarFovHalfAngle);

struct CompassMark {
  double bearing_offset_deg = 0.0;  // positive = to the walker's left
  int distance_m = 0;               // only meaningful for front marks
  int target_index = 0;
};

struct CompassProjection {
  std::vector<CompassMark> front;
  std::vector<CompassMark> behind;
};

CompassProjection compass_project(const Pose& head, std::span<const Vec3> targets);

/// Inverse-distance gain, clamped to 1 inside one meter.
double audio_gain(const Vec3& listener, const Vec3& source);

std::string guidance_csv_header();
std::string guidance_csv_row(double t, const ParticleGuideState& state);
std::string guidance_csv_row(double t, const ArrowGuideState& state);
std::string guidance_csv_row(double t, const RadarProjection& radar);
std::string guidance_csv_row(double t, const CompassProjection& compass);

}  // namespace artheater::guidance
