#include <artheater/harness/walkers.hpp>

#include <algorithm>

namespace artheater::harness {

Pose guided_walker_step(const Pose& pose, const std::optional<Vec2>& bearing, double speed, double max_turn_rate,
                        double dt, bool stop) {
  if (stop || !bearing || bearing->norm() == 0.0) return pose;
  Pose next = pose;
  const double want = std::atan2(bearing->y(), bearing->x());
  const double limit = max_turn_rate * dt;
  next.heading = wrap_angle(pose.heading + std::clamp(wrap_angle(want - pose.heading), -limit, limit));
  next.position += speed * dt * next.forward();
  return next;
}

Walker::Walker(const WalkerSpec& spec, const Pose& start, std::uint64_t seed)
    : spec_(spec), pose_(start), rng_(make_rng(seed, 0x3a1)) {
  pose_.head_height = spec.head_height;
}

bool Walker::finished() const { return spec_.kind == WalkerKind::Waypoint && next_ >= spec_.points.size(); }

bool Walker::clear(const geometry::OcclusionScene& scene, const Vec2& from, const Vec2& to) const {
  return geometry::point_in_walkable(scene, to) && geometry::nearest_edge_distance(scene, to) >= spec_.body_radius &&
         geometry::line_of_sight(scene, from, to);
}

void Walker::waypoint_step(double dt) {
  double left = dt;
  while (left > 0.0 && next_ < spec_.points.size()) {
    const Waypoint& wp = spec_.points[next_];
    if (dwelling_) {
      const double h = std::min(left, dwell_left_);
      dwell_left_ -= h;
      left -= h;
      if (dwell_left_ <= 1e-12) {
        dwelling_ = false;
        ++next_;
      }
      continue;
    }
    const Vec2 to = wp.position - pose_.position;
    const double dist = to.norm();
    if (dist > 0.0) pose_.heading = std::atan2(to.y(), to.x());
    const double reach = spec_.speed * left;
    if (reach < dist) {
      pose_.position += to * (reach / dist);
      left = 0.0;
    } else {
      pose_.position = wp.position;
      left -= dist / spec_.speed;
      dwelling_ = true;
      dwell_left_ = wp.dwell;
    }
  }
}

void Walker::wander_step(const geometry::OcclusionScene& scene, double dt) {
  pose_.heading = wrap_angle(pose_.heading + deg2rad(spec_.turn_noise_deg) * std::sqrt(dt) * gaussian(rng_));
  const Vec2 to = pose_.position + spec_.speed * dt * pose_.forward();
  if (clear(scene, pose_.position, to)) {
    pose_.position = to;
  } else {
    pose_.heading = uniform(rng_, -kPi, kPi);
  }
}

const Pose& Walker::step(const geometry::OcclusionScene& scene, const std::optional<Vec2>& bearing, bool hold,
                         double dt) {
  switch (spec_.kind) {
    case WalkerKind::Waypoint: waypoint_step(dt); break;
    case WalkerKind::Wander: wander_step(scene, dt); break;
    case WalkerKind::Guided: {
      const Pose next = guided_walker_step(pose_, bearing, spec_.speed, deg2rad(spec_.max_turn_deg), dt, hold);
      if (clear(scene, pose_.position, next.position)) {
        pose_ = next;
      } else {
        pose_.heading = next.heading;
      }
      break;
    }
    case WalkerKind::Policy: throw ConfigError("Policy walkers are driven by the agents environment");
  }
  return pose_;
}

}  // namespace artheater::harness
