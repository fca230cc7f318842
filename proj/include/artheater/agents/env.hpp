#pragma once

#include <artheater/core.hpp>
#include <artheater/geometry/twin.hpp>
#include <artheater/stage/engine.hpp>
#include <artheater/trace.hpp>

#include <array>
#include <optional>
#include <vector>

namespace artheater::agents {

ARTHEATER_DEFINE_ERROR(StepBeforeReset);
ARTHEATER_DEFINE_ERROR(EnvConfigError);

inline constexpr int kZoneCount = 3;
inline constexpr int kRayCount = 12;
inline constexpr int kGestureCount = 4;
inline constexpr int kObservationDim = 2 + 2 + kRayCount + 3 * kZoneCount + 1 + 1;

using Observation = Eigen::Matrix<double, kObservationDim, 1>;

/// Straight corridor with a ticket booth near x = 0, three content zones
/// along the centerline and the exit at the far end.
struct CorridorLayout {
  double length = 20.0;
  double width = 4.0;
  Vec2 booth{2.0, 2.0};
  double spawn_radius = 1.5;
  std::array<Vec2, kZoneCount> zones{Vec2(8.0, 2.0), Vec2(13.0, 2.0), Vec2(18.0, 2.0)};
  double zone_radius = stage::kDefaultZoneRadius;
  double clip_seconds = 17.0;
  Vec2 exit{19.3, 2.0};
  double exit_radius = 1.0;

  geometry::OcclusionScene scene() const;
  stage::CueSheet cue_sheet() const;
  /// Throws geometry::InvalidScene if the spawn disc or a zone leaves the floor.
  void validate(double agent_radius) const;
};

struct RewardConfig {
  std::array<double, kZoneCount> zone_entry{48.2, 63.7, 85.5};
  double all_zones_bonus = 41.0;
  double staying_rate = 1.0;  // per second inside a zone
  double staying_cap = 17.0;  // seconds per zone
  double proximity_rate = 0.03;
  double proximity_radius = 4.0;
  double wall_contact_rate = 0.01;  // subtracted per second of contact
  double wall_tolerance = 1e-3;
  bool entry_by_identity = false;  // key entry rewards to zone index instead of entry order
};

struct EnvConfig {
  CorridorLayout layout;
  RewardConfig reward;
  double dt = 0.2;
  double episode_seconds = 90.0;
  double max_speed = 1.4;
  double max_turn_deg = 120.0;
  double agent_radius = 0.3;
  double ray_range = 10.0;
};

struct AgentAction {
  double speed = 0.0;  // [0, 1] of max_speed
  double turn = 0.0;   // [-1, 1] of max_turn_deg per second
  int gesture = 0;     // idle animation id, 0..3

  AgentAction clamped() const;
};

AgentAction random_action(Rng& rng);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;  // play ended through the exit
  bool truncated = false;   // episode cap
  std::vector<stage::StageEvent> events;

  bool done() const { return terminated || truncated; }
};

class CorridorEnv {
 public:
  explicit CorridorEnv(EnvConfig config = {});

  /// Spawns uniformly in the booth disc with a uniform heading.
  Observation reset(std::uint64_t seed);
  /// Starts an episode from a given pose (demonstration replay).
  Observation reset_to(const Pose& pose);

  StepResult step(const AgentAction& action);
  /// Scripted step: the agent is placed at `pose` and scored as if it had
  /// walked there during one dt.
  StepResult step_to(const Pose& pose);

  Observation observe() const;

  const EnvConfig& config() const { return config_; }
  const geometry::OcclusionScene& scene() const { return scene_; }
  const Pose& pose() const { return pose_; }
  double clock() const { return clock_; }
  bool done() const { return done_; }
  int zones_entered() const { return static_cast<int>(visit_order_.size()); }
  const std::vector<int>& visit_order() const { return visit_order_; }
  double total_reward() const { return total_reward_; }
  /// Seconds of staying credit in the zone the agent stands in, else 0.
  double time_in_current_zone() const;
  bool zone_entered(int i) const { return entered_[static_cast<std::size_t>(i)]; }
  const LocomotionTrace& trace() const { return trace_; }
  const std::vector<stage::StageEvent>& events() const { return events_; }
  const stage::StageState& stage_state() const { return stage_; }

 private:
  void start(const Pose& pose);
  StepResult finish_step();
  Vec2 resolve_walls(Vec2 p) const;

  EnvConfig config_;
  geometry::OcclusionScene scene_;
  stage::CueSheet sheet_;
  stage::StageState stage_;
  Pose pose_;
  double clock_ = 0.0;
  bool started_ = false;
  bool done_ = false;
  std::array<bool, kZoneCount> entered_{};
  std::array<double, kZoneCount> stayed_{};
  std::vector<int> visit_order_;
  double total_reward_ = 0.0;
  LocomotionTrace trace_;
  std::vector<stage::StageEvent> events_;
};

/// Reward of a whole trace computed directly from the positions, without the
/// environment: each interval is scored at its end sample.
double episode_reward_oracle(const LocomotionTrace& trace, const CorridorLayout& layout, const RewardConfig& config,
                             double agent_radius = 0.3);

}  // namespace artheater::agents
