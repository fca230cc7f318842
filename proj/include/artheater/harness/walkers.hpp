#pragma once

#include <artheater/geometry/twin.hpp>
#include <artheater/harness/config.hpp>

#include <optional>

namespace artheater::harness {

/// One step of a walker that follows a guidance aid: turn toward `bearing`
/// by at most `max_turn_rate * dt`, then advance `speed * dt` along the new
/// heading. With `stop` set, or without a bearing, the pose is unchanged.
Pose guided_walker_step(const Pose& pose, const std::optional<Vec2>& bearing, double speed, double max_turn_rate,
                        double dt, bool stop = false);

/// Synthetic participant driven by a WalkerSpec. Policy walkers are not
/// handled here; they run inside the agents environment.
class Walker {
 public:
  Walker(const WalkerSpec& spec, const Pose& start, std::uint64_t seed);

  /// `bearing` and `hold` only matter to Guided walkers.
  const Pose& step(const geometry::OcclusionScene& scene, const std::optional<Vec2>& bearing, bool hold, double dt);

  const Pose& pose() const { return pose_; }
  /// A Waypoint walker that has reached its last point and served its dwell.
  bool finished() const;

 private:
  bool clear(const geometry::OcclusionScene& scene, const Vec2& from, const Vec2& to) const;
  void waypoint_step(double dt);
  void wander_step(const geometry::OcclusionScene& scene, double dt);

  WalkerSpec spec_;
  Pose pose_;
  Rng rng_;
  std::size_t next_ = 0;
  double dwell_left_ = 0.0;
  bool dwelling_ = false;
};

}  // namespace artheater::harness
