#pragma once

#include <artheater/core.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace artheater::stage {

ARTHEATER_DEFINE_ERROR(CueSheetError);
ARTHEATER_DEFINE_ERROR(MalformedEventStream);

/// Radius giving a 2.8 m^2 circular content zone.
inline const double kDefaultZoneRadius = std::sqrt(2.8 / kPi);
inline constexpr double kDefaultTriggerRadius = 1.0;
inline constexpr double kDefaultDt = 0.02;

struct Circle {
  double radius = kDefaultZoneRadius;
};
struct Square {
  double side = 1.0;
};
using ZoneShape = std::variant<Circle, Square>;

struct PerformanceClip {
  std::string id;
  double duration = 17.0;
};

struct ContentZone {
  std::string id;
  Vec2 center = Vec2::Zero();
  ZoneShape shape = Circle{};
  PerformanceClip clip;

  bool contains(const Vec2& p) const;
  double area() const;
};

struct LocationTrigger {
  Vec2 center = Vec2::Zero();
  double radius = kDefaultTriggerRadius;
  bool one_shot = true;
  std::string payload;
};

/// Fires iff the pose is within the closed disc and the trigger is not a
/// spent one-shot.
bool trigger_check(const LocationTrigger& trigger, const Pose& pose, bool fired_before);

enum class GuidanceMode { Particle, Arrow, None };

struct Stage {
  std::string theme;
  std::vector<ContentZone> zones;
  GuidanceMode guidance = GuidanceMode::None;
  Vec2 spiral = Vec2::Zero();
  double spiral_radius = kDefaultTriggerRadius;
  std::vector<LocationTrigger> triggers;  // extra pathway triggers with event payloads
};

struct CueSheet {
  std::vector<Stage> stages;
};

/// Throws CueSheetError when the sheet breaks an invariant.
void validate(const CueSheet& sheet);

enum class ZoneStatus { Unvisited, Playing, Done };

struct StageState {
  int stage = 0;
  std::vector<ZoneStatus> zones;
  std::vector<double> clip_started_at;
  std::vector<bool> trigger_fired;
  bool spiral_active = false;
  bool ended = false;
  double clock = 0.0;
  std::uint64_t ticks = 0;
};

StageState initial_state(const CueSheet& sheet);

enum class EventKind { TriggerFired, ClipStarted, ClipEnded, SpiralSpawned, StageAdvanced, PlayEnded };

struct StageEvent {
  double time = 0.0;
  EventKind kind = EventKind::TriggerFired;
  std::string subject;

  bool operator==(const StageEvent&) const = default;
};

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);
std::string to_string(GuidanceMode mode);
GuidanceMode guidance_mode_from_string(const std::string& s);

/// Advances the engine by dt; `pose` is the walker pose at the end of the step.
std::pair<StageState, std::vector<StageEvent>> step(StageState state, const CueSheet& sheet, const Pose& pose,
                                                    double dt);

/// Where guidance should point: the nearest unvisited zone of the current
/// stage, else the spiral once active. None while clips are still running
/// and nothing is left to visit, or after the play ended.
std::optional<Vec2> guidance_target(const StageState& state, const CueSheet& sheet, const Vec2& from);

struct TimedPosition {
  double t = 0.0;
  Vec2 position = Vec2::Zero();
};

struct StageTiming {
  std::vector<double> durations;
  std::vector<std::vector<std::string>> visit_order;  // zone ids in ClipStarted order
  std::vector<double> distances;                      // walked per stage, from the trace
  double total_distance = 0.0;
};

StageTiming stage_timing_report(const std::vector<StageEvent>& events, const std::vector<TimedPosition>& trace = {});

nlohmann::json cue_sheet_to_json(const CueSheet& sheet);
CueSheet cue_sheet_from_json(const nlohmann::json& j);

std::string events_to_jsonl(const std::vector<StageEvent>& events);
std::vector<StageEvent> events_from_jsonl(const std::string& text);

/// Three themed stages (Future, Fantasy, Forest) along a 30 m x 4 m hallway,
/// three 2.8 m^2 zones per stage spaced 8 m apart, 24/28/30 s clips.
CueSheet corridor_sheet();

}  // namespace artheater::stage
