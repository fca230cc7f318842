#include <artheater/agents/env.hpp>
#include <artheater/geometry/primitives.hpp>

#include <fmt/format.h>

#include <algorithm>

namespace artheater::agents {

geometry::OcclusionScene CorridorLayout::scene() const {
  using geometry::TraceMode;
  geometry::TraceGraph g;
  const Vec2 c[4] = {{0, 0}, {length, 0}, {length, width}, {0, width}};
  for (int i = 0; i < 4; ++i) g = geometry::trace_segment(std::move(g), c[i], c[(i + 1) % 4], TraceMode::Wall);
  return geometry::build_scene(g, 2.5);
}

stage::CueSheet CorridorLayout::cue_sheet() const {
  stage::Stage st;
  st.theme = "Corridor";
  st.guidance = stage::GuidanceMode::None;
  st.spiral = exit;
  st.spiral_radius = exit_radius;
  for (int i = 0; i < kZoneCount; ++i) {
    stage::ContentZone z;
    z.id = "z" + std::to_string(i + 1);
    z.center = zones[static_cast<std::size_t>(i)];
    z.shape = stage::Circle{zone_radius};
    z.clip = {z.id + "-clip", clip_seconds};
    st.zones.push_back(z);
  }
  stage::CueSheet sheet;
  sheet.stages.push_back(std::move(st));
  return sheet;
}

void CorridorLayout::validate(double agent_radius) const {
  const auto inside = [&](const Vec2& p, double margin) {
    return p.x() - margin >= 0 && p.x() + margin <= length && p.y() - margin >= 0 && p.y() + margin <= width;
  };
  if (!(length > 0 && width > 0)) throw geometry::InvalidScene("corridor must have positive size");
  if (!inside(booth, spawn_radius + agent_radius)) throw geometry::InvalidScene("spawn disc leaves the corridor");
  for (const auto& z : zones) {
    if (!inside(z, zone_radius)) throw geometry::InvalidScene("content zone leaves the corridor");
  }
  if (!inside(exit, 0.0)) throw geometry::InvalidScene("exit outside the corridor");
}

AgentAction AgentAction::clamped() const {
  return {std::clamp(speed, 0.0, 1.0), std::clamp(turn, -1.0, 1.0), std::clamp(gesture, 0, kGestureCount - 1)};
}

AgentAction random_action(Rng& rng) {
  AgentAction a;
  a.speed = uniform01(rng);
  a.turn = uniform(rng, -1.0, 1.0);
  a.gesture = static_cast<int>(rng() % kGestureCount);
  return a;
}

CorridorEnv::CorridorEnv(EnvConfig config) : config_(std::move(config)) {
  if (!(config_.dt > 0 && config_.episode_seconds > 0 && config_.max_speed > 0 && config_.agent_radius > 0 &&
        config_.ray_range > 0)) {
    throw EnvConfigError("dt, episode length, speed, radius and ray range must be positive");
  }
  config_.layout.validate(config_.agent_radius);
  scene_ = config_.layout.scene();
  sheet_ = config_.layout.cue_sheet();
}

Observation CorridorEnv::reset(std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xe4f);
  const double r = config_.layout.spawn_radius * std::sqrt(uniform01(rng));
  const double a = uniform(rng, -kPi, kPi);
  Pose p;
  p.position = config_.layout.booth + r * Vec2(std::cos(a), std::sin(a));
  p.heading = uniform(rng, -kPi, kPi);
  start(p);
  return observe();
}

Observation CorridorEnv::reset_to(const Pose& pose) {
  start(pose);
  return observe();
}

void CorridorEnv::start(const Pose& pose) {
  pose_ = pose;
  pose_.heading = wrap_angle(pose.heading);
  clock_ = 0.0;
  started_ = true;
  done_ = false;
  entered_.fill(false);
  stayed_.fill(0.0);
  visit_order_.clear();
  total_reward_ = 0.0;
  stage_ = stage::initial_state(sheet_);
  events_.clear();
  trace_.samples.clear();
  trace_.samples.push_back({0.0, pose_.position, pose_.heading, pose_.head_height});
}

Vec2 CorridorEnv::resolve_walls(Vec2 p) const {
  const double r = config_.agent_radius;
  for (int pass = 0; pass < 3; ++pass) {
    for (const auto& e : scene_.edges) {
      const Vec2 ab = e.b - e.a;
      const double t = std::clamp((p - e.a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      const Vec2 q = e.a + t * ab;
      const Vec2 d = p - q;
      const double n = d.norm();
      if (n >= r) continue;
      // Push back along the wall normal, toward the walkable side.
      Vec2 normal = n > 1e-12 ? Vec2(d / n) : Vec2(-ab.y(), ab.x()).normalized();
      p = q + r * normal;
    }
  }
  const Box2& b = scene_.bounds;
  return {std::clamp(p.x(), b.min.x() + r, b.max.x() - r), std::clamp(p.y(), b.min.y() + r, b.max.y() - r)};
}

StepResult CorridorEnv::step(const AgentAction& action) {
  if (!started_ || done_) throw StepBeforeReset("call reset() before step()");
  const AgentAction a = action.clamped();
  pose_.heading = wrap_angle(pose_.heading + a.turn * deg2rad(config_.max_turn_deg) * config_.dt);
  pose_.position = resolve_walls(pose_.position + a.speed * config_.max_speed * config_.dt * pose_.forward());
  return finish_step();
}

StepResult CorridorEnv::step_to(const Pose& pose) {
  if (!started_ || done_) throw StepBeforeReset("call reset() before step_to()");
  pose_ = pose;
  pose_.heading = wrap_angle(pose.heading);
  return finish_step();
}

StepResult CorridorEnv::finish_step() {
  const double dt = config_.dt;
  const auto& rc = config_.reward;
  const auto& lay = config_.layout;
  clock_ += dt;
  StepResult out;

  auto [next, ev] = stage::step(std::move(stage_), sheet_, pose_, dt);
  stage_ = std::move(next);

  double reward = 0.0;
  for (const auto& e : ev) {
    if (e.kind != stage::EventKind::ClipStarted) continue;
    const int zone = std::stoi(e.subject.substr(1)) - 1;
    const auto ordinal = visit_order_.size();
    entered_[static_cast<std::size_t>(zone)] = true;
    visit_order_.push_back(zone);
    reward += rc.zone_entry[rc.entry_by_identity ? static_cast<std::size_t>(zone) : ordinal];
    if (visit_order_.size() == kZoneCount) reward += rc.all_zones_bonus;
  }
  for (std::size_t i = 0; i < kZoneCount; ++i) {
    if (entered_[i] && (pose_.position - lay.zones[i]).norm() <= lay.zone_radius) {
      const double add = std::max(0.0, std::min(dt, rc.staying_cap - stayed_[i]));
      stayed_[i] += add;
      reward += rc.staying_rate * add;
    }
  }
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kZoneCount; ++i) {
    if (!entered_[i]) nearest = std::min(nearest, (pose_.position - lay.zones[i]).norm());
  }
  if (nearest <= rc.proximity_radius) reward += rc.proximity_rate * dt;
  if (geometry::nearest_edge_distance(scene_, pose_.position) <= config_.agent_radius + rc.wall_tolerance) {
    reward -= rc.wall_contact_rate * dt;
  }

  total_reward_ += reward;
  trace_.samples.push_back({clock_, pose_.position, pose_.heading, pose_.head_height});
  events_.insert(events_.end(), ev.begin(), ev.end());

  out.reward = reward;
  out.terminated = stage_.ended;
  out.truncated = !out.terminated && clock_ >= config_.episode_seconds - 1e-9;
  out.events = std::move(ev);
  out.observation = observe();
  done_ = out.done();
  return out;
}

double CorridorEnv::time_in_current_zone() const {
  for (std::size_t i = 0; i < kZoneCount; ++i) {
    if ((pose_.position - config_.layout.zones[i]).norm() <= config_.layout.zone_radius) return stayed_[i];
  }
  return 0.0;
}

Observation CorridorEnv::observe() const {
  const auto& lay = config_.layout;
  Observation o;
  int k = 0;
  o[k++] = 2.0 * pose_.position.x() / lay.length - 1.0;
  o[k++] = 2.0 * pose_.position.y() / lay.width - 1.0;
  o[k++] = std::sin(pose_.heading);
  o[k++] = std::cos(pose_.heading);
  for (int i = 0; i < kRayCount; ++i) {
    const double a = pose_.heading + 2.0 * kPi * i / kRayCount;
    const auto hit = geometry::raycast(scene_, pose_.position, {std::cos(a), std::sin(a)}, config_.ray_range);
    o[k++] = hit ? *hit / config_.ray_range : 1.0;
  }
  const Eigen::Rotation2Dd to_local(-pose_.heading);
  for (std::size_t i = 0; i < kZoneCount; ++i) {
    const Vec2 rel = to_local * (lay.zones[i] - pose_.position) / 20.0;
    o[k++] = rel.x();
    o[k++] = rel.y();
    o[k++] = entered_[i] ? 1.0 : 0.0;
  }
  o[k++] = time_in_current_zone() / 17.0;
  o[k++] = stage_.spiral_active ? 1.0 : 0.0;
  return o.cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace artheater::agents
