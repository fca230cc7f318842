#pragma once

#include <artheater/core.hpp>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace artheater::bubbles {

ARTHEATER_DEFINE_ERROR(InvalidAltitude);
ARTHEATER_DEFINE_ERROR(MisalignedTraces);
ARTHEATER_DEFINE_ERROR(InvalidTimeStep);
ARTHEATER_DEFINE_ERROR(NoteStreamError);

inline const std::array<std::string, 10> kChords = {"EMaj", "Em",   "FMaj7", "GMaj", "G7",
                                                    "Am",   "Bdim", "Bm5",   "Cmaj", "Dm"};

/// Square fenced area, axis-aligned around `center`.
struct PlaySpace {
  double side = 3.3;
  Vec2 center = Vec2::Zero();

  Box2 fence() const { return {center.array() - side / 2, center.array() + side / 2}; }
  /// Region available to bubble centers so a bubble of `radius` stays inside.
  Box2 inner(double radius) const { return {center.array() - (side / 2 - radius), center.array() + (side / 2 - radius)}; }
};

struct Bubble {
  int id = 0;
  std::string chord;
  Vec3 center = Vec3::Zero();
  Vec2 velocity = Vec2::Zero();
  double diameter = 0.8;
  double until_reaim = 0.0;

  double radius() const { return diameter / 2; }
};

struct BubbleConfig {
  double diameter = 0.8;
  double speed = 0.2;    // m/s
  double altitude = 1.6;
  double reaim_mean = 8.0;  // s; <= 0 disables random re-aiming
};

struct Orchestra {
  BubbleConfig config;
  std::vector<Bubble> bubbles;
  double clock = 0.0;
  Rng rng;
};

/// Ten bubbles, one per chord, at random positions and headings inside the
/// fence.
Orchestra make_orchestra(const PlaySpace& space, const BubbleConfig& config, std::uint64_t seed);

/// Advances every bubble by `dt`. Bounces are specular against the fence
/// inset by the bubble radius; re-aims happen at exponential holding times.
Orchestra bubble_step(Orchestra orchestra, const PlaySpace& space, double dt);

bool head_inside(const Bubble& bubble, const Vec3& head);

enum class NoteKind { On, Off };

struct NoteEvent {
  double time = 0.0;
  int bubble = 0;
  std::string chord;
  NoteKind kind = NoteKind::On;

  bool operator==(const NoteEvent&) const = default;
};

/// Bubble states sampled on the same clock as the head trace.
using BubbleTrajectory = std::vector<std::vector<Bubble>>;

/// On at every outside-to-inside transition, Off at inside-to-outside. Sample
/// k is at time t0 + k dt. Notes still held at the last sample stay open.
std::vector<NoteEvent> note_events(std::span<const Vec3> heads, const BubbleTrajectory& trajectory, double dt,
                                   double t0 = 0.0);

std::vector<Bubble> accessibility_set_height(std::vector<Bubble> bubbles, double altitude);
Orchestra accessibility_set_height(Orchestra orchestra, double altitude);

std::string notes_to_jsonl(std::span<const NoteEvent> events);
std::vector<NoteEvent> notes_from_jsonl(const std::string& text);
std::string notes_csv(std::span<const NoteEvent> events);

}  // namespace artheater::bubbles
