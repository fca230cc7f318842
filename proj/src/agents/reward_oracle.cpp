#include <artheater/agents/env.hpp>

#include <algorithm>

namespace artheater::agents {

namespace {

double wall_distance(const CorridorLayout& lay, const Vec2& p) {
  return std::min({p.x(), lay.length - p.x(), p.y(), lay.width - p.y()});
}

}  // namespace

double episode_reward_oracle(const LocomotionTrace& trace, const CorridorLayout& lay, const RewardConfig& c,
                             double agent_radius) {
  const auto& s = trace.samples;
  double total = 0.0;
  int entries = 0;
  std::array<bool, kZoneCount> entered{};
  std::array<double, kZoneCount> inside_time{};

  for (std::size_t k = 1; k < s.size(); ++k) {
    const double h = s[k].t - s[k - 1].t;
    const Vec2& p = s[k].position;
    std::array<bool, kZoneCount> inside{};
    for (int i = 0; i < kZoneCount; ++i) {
      const auto zi = static_cast<std::size_t>(i);
      const Vec2 d = p - lay.zones[zi];
      inside[zi] = d.x() * d.x() + d.y() * d.y() <= lay.zone_radius * lay.zone_radius;
    }
    for (int i = 0; i < kZoneCount; ++i) {
      const auto zi = static_cast<std::size_t>(i);
      if (inside[zi] && !entered[zi]) {
        total += c.entry_by_identity ? c.zone_entry[zi] : c.zone_entry[static_cast<std::size_t>(entries)];
        entered[zi] = true;
        if (++entries == kZoneCount) total += c.all_zones_bonus;
      }
    }
    for (std::size_t i = 0; i < kZoneCount; ++i) {
      if (!inside[i]) continue;
      // Staying time counted in whole intervals until the cap is reached.
      const double before = inside_time[i];
      inside_time[i] = std::min(c.staying_cap, before + h);
      total += c.staying_rate * (inside_time[i] - before);
    }
    bool near = false;
    for (std::size_t i = 0; i < kZoneCount; ++i) {
      near = near || (!entered[i] && (p - lay.zones[i]).norm() <= c.proximity_radius);
    }
    if (near) total += c.proximity_rate * h;
    if (wall_distance(lay, p) <= agent_radius + c.wall_tolerance) total -= c.wall_contact_rate * h;
  }
  return total;
}

}  // namespace artheater::agents
