#include <artheater/guidance/guidance.hpp>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>

namespace artheater::guidance {

namespace {

Vec3 spawn_point(const Pose& head, const ParticleConfig& c, Rng& rng) {
  const Vec2 f = head.forward();
  const Vec3 center = head.head() + c.respawn_forward * Vec3(f.x(), f.y(), 0.0);
  // Uniform in a ball: rejection sampling from the enclosing cube.
  for (;;) {
    const Vec3 u(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    if (u.squaredNorm() <= 1.0) return center + c.respawn_radius * u;
  }
}

Vec3 toward(const Vec3& from, const Vec3& to, const Vec3& fallback) {
  const Vec3 d = to - from;
  const double n = d.norm();
  return n > 0.0 ? Vec3(d / n) : fallback;
}

void respawn(Particle& p, const Pose& head, const Vec3& target, const ParticleConfig& c, Rng& rng) {
  p.position = spawn_point(head, c, rng);
  p.reset_direction = toward(p.position, target, Vec3(head.forward().x(), head.forward().y(), 0.0));
  p.velocity = c.speed * p.reset_direction;
  p.age = 0.0;
  p.until_reset = c.reset_interval;
  p.streak.clear();
  ++p.generation;
  p.reset_count = 0;
  p.distance_at_last_reset = (target - p.position).norm();
}

/// Rotates the heading of `v` by a Gaussian angle about a random axis
/// perpendicular to it. Speed is unchanged.
Vec3 perturb(const Vec3& v, double sigma, Rng& rng) {
  if (sigma <= 0.0) return v;
  const double speed = v.norm();
  const Vec3 dir = v / speed;
  Vec3 u;
  do {
    const Vec3 g(gaussian(rng), gaussian(rng), gaussian(rng));
    u = g - g.dot(dir) * dir;
  } while (u.norm() < 1e-9);
  u.normalize();
  const double a = sigma * gaussian(rng);
  return speed * (std::cos(a) * dir + std::sin(a) * u);
}

bool arrived(const Particle& p, const Vec3& target, const ParticleConfig& c) {
  const Vec3 to_target = target - p.position;
  return to_target.norm() <= c.arrival_radius || to_target.dot(p.reset_direction) <= 0.0 || p.age >= c.max_age;
}

}  // namespace

ParticleGuideState make_particle_guide(const Pose& head, const Vec3& target, const ParticleConfig& config,
                                       std::uint64_t seed) {
  ParticleGuideState s;
  s.config = config;
  s.config.count = std::clamp(config.count, 1, 6);
  s.target = target;
  s.rng = make_rng(seed, 0x9a7);
  s.particles.resize(static_cast<std::size_t>(s.config.count));
  for (auto& p : s.particles) respawn(p, head, target, s.config, s.rng);
  return s;
}

ParticleGuideState particle_step(ParticleGuideState s, const Pose& head, const Vec3& target, double dt) {
  const auto& c = s.config;
  s.target = target;
  const double sigma_rate = deg2rad(c.noise_deg_per_sqrt_s);
  const double t_end = s.clock + dt;

  for (auto& p : s.particles) {
    double remaining = dt;
    while (remaining > 0.0) {
      const double h = std::min(remaining, p.until_reset);
      p.velocity = perturb(p.velocity, sigma_rate * std::sqrt(h), s.rng);
      p.position += p.velocity * h;
      p.age += h;
      p.until_reset -= h;
      remaining -= h;
      if (arrived(p, target, c)) {
        respawn(p, head, target, c, s.rng);
        break;
      }
      if (p.until_reset <= 1e-12) {
        p.reset_direction = toward(p.position, target, p.reset_direction);
        p.velocity = c.speed * p.reset_direction;
        p.until_reset = c.reset_interval;
        ++p.reset_count;
        p.distance_at_last_reset = (target - p.position).norm();
      }
    }
    p.streak.push_back({t_end, p.position});
    while (!p.streak.empty() && p.streak.front().t < t_end - c.streak_seconds) p.streak.pop_front();
  }
  s.clock = t_end;
  return s;
}

ArrowGuideState arrow_pose(const ArrowGuideState& previous, const Pose& head, const Vec3& target,
                           bool performance_active, double dt, const ArrowConfig& config) {
  ArrowGuideState a;
  const Vec2 gaze = head.forward();
  const Vec2 base = head.position + config.distance * gaze;
  a.position = {base.x(), base.y(), config.height};

  const Vec2 to_target = target.head<2>() - head.position;
  const Vec2 dir = to_target.norm() > 0.0 ? Vec2(to_target.normalized()) : gaze;
  a.pointing = {dir.x(), dir.y(), 0.0};

  const double rate = config.fade_seconds > 0.0 ? dt / config.fade_seconds : 1.0;
  a.opacity = performance_active ? std::max(0.0, previous.opacity - rate) : std::min(1.0, previous.opacity + rate);
  return a;
}

RadarProjection radar_project(const Pose& head, std::span<const Vec3> targets, double range, double fov_half_angle) {
  RadarProjection r;
  r.fov_half_angle = fov_half_angle;
  const Vec2 fwd = head.forward();
  const Vec2 right(fwd.y(), -fwd.x());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Vec2 rel = targets[i].head<2>() - head.position;
    if (rel.norm() > range) continue;
    r.blips.push_back({Vec2(rel.dot(right), rel.dot(fwd)) / range, static_cast<int>(i)});
  }
  return r;
}

CompassProjection compass_project(const Pose& head, std::span<const Vec3> targets) {
  CompassProjection c;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Vec2 rel = targets[i].head<2>() - head.position;
    const double offset = rad2deg(wrap_angle(std::atan2(rel.y(), rel.x()) - head.heading));
    CompassMark m{offset, static_cast<int>(std::lround(rel.norm())), static_cast<int>(i)};
    if (std::abs(offset) <= 90.0) {
      c.front.push_back(m);
    } else {
      m.distance_m = 0;
      c.behind.push_back(m);
    }
  }
  return c;
}

double audio_gain(const Vec3& listener, const Vec3& source) {
  const double d = (listener - source).norm();
  return d <= 1.0 ? 1.0 : 1.0 / d;
}

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string row(double t, const char* kind, const Vec3& p, const Vec3& d, const std::string& opacity,
                const nlohmann::json& items) {
  return fmt::format("{:.6f},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{}\n", t, kind, p.x(), p.y(), p.z(),
                     d.x(), d.y(), d.z(), opacity, csv_quote(items.dump()));
}

}  // namespace

std::string guidance_csv_header() { return "t,kind,x,y,z,dx,dy,dz,opacity,items\n"; }

std::string guidance_csv_row(double t, const ParticleGuideState& s) {
  Vec3 centroid = Vec3::Zero(), vel = Vec3::Zero();
  nlohmann::json items = nlohmann::json::array();
  for (const auto& p : s.particles) {
    centroid += p.position;
    vel += p.velocity;
    items.push_back({p.position.x(), p.position.y(), p.position.z()});
  }
  centroid /= static_cast<double>(s.particles.size());
  if (vel.norm() > 0) vel.normalize();
  return row(t, "particle", centroid, vel, "", items);
}

std::string guidance_csv_row(double t, const ArrowGuideState& a) {
  return row(t, "arrow", a.position, a.pointing, fmt::format("{:.6f}", a.opacity), nlohmann::json::array());
}

std::string guidance_csv_row(double t, const RadarProjection& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& b : r.blips) items.push_back({b.position.x(), b.position.y(), b.target_index});
  return row(t, "radar", Vec3::Zero(), Vec3::UnitY(), "", items);
}

std::string guidance_csv_row(double t, const CompassProjection& c) {
  nlohmann::json front = nlohmann::json::array(), behind = nlohmann::json::array();
  for (const auto& m : c.front) front.push_back({m.bearing_offset_deg, m.distance_m, m.target_index});
  for (const auto& m : c.behind) behind.push_back({m.bearing_offset_deg, m.target_index});
  return row(t, "compass", Vec3::Zero(), Vec3::UnitY(), "", {{"front", front}, {"behind", behind}});
}

}  // namespace artheater::guidance
