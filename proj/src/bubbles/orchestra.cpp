#include <artheater/bubbles/orchestra.hpp>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <sstream>

namespace artheater::bubbles {

namespace {

Vec2 random_heading(Rng& rng, double speed) {
  const double a = uniform(rng, -kPi, kPi);
  return speed * Vec2(std::cos(a), std::sin(a));
}

double next_reaim(Rng& rng, const BubbleConfig& c) {
  return c.reaim_mean > 0.0 ? exponential(rng, c.reaim_mean) : std::numeric_limits<double>::infinity();
}

/// Reflects a coordinate back into [lo, hi], possibly several times;
/// flips `v` when an odd number of bounces happened.
void bounce(double& x, double& v, double lo, double hi) {
  if (x >= lo && x <= hi) return;
  const double span = hi - lo;
  if (!(span > 0.0)) {
    x = 0.5 * (lo + hi);
    return;
  }
  const double q = (x - lo) / span;
  const double k = std::floor(q);
  const double frac = q - k;
  if (std::fmod(std::abs(k), 2.0) == 1.0) {
    x = hi - frac * span;
    v = -v;
  } else {
    x = lo + frac * span;
  }
}

void advance(Bubble& b, const Box2& inner, double h) {
  for (int d = 0; d < 2; ++d) {
    b.center[d] += b.velocity[d] * h;
    bounce(b.center[d], b.velocity[d], inner.min[d], inner.max[d]);
  }
}

}  // namespace

Orchestra make_orchestra(const PlaySpace& space, const BubbleConfig& config, std::uint64_t seed) {
  if (!(config.altitude > 0.0)) throw InvalidAltitude(fmt::format("altitude {}", config.altitude));
  Orchestra o;
  o.config = config;
  o.rng = make_rng(seed, 0xb0bb1e);
  const Box2 inner = space.inner(config.diameter / 2);
  for (std::size_t i = 0; i < kChords.size(); ++i) {
    Bubble b;
    b.id = static_cast<int>(i);
    b.chord = kChords[i];
    b.diameter = config.diameter;
    b.center = {uniform(o.rng, inner.min.x(), inner.max.x()), uniform(o.rng, inner.min.y(), inner.max.y()),
                config.altitude};
    b.velocity = random_heading(o.rng, config.speed);
    b.until_reaim = next_reaim(o.rng, config);
    o.bubbles.push_back(std::move(b));
  }
  return o;
}

Orchestra bubble_step(Orchestra o, const PlaySpace& space, double dt) {
  if (!(dt > 0.0)) throw InvalidTimeStep(fmt::format("dt = {}", dt));
  for (auto& b : o.bubbles) {
    const Box2 inner = space.inner(b.radius());
    double remaining = dt;
    while (b.until_reaim <= remaining) {
      advance(b, inner, b.until_reaim);
      remaining -= b.until_reaim;
      b.velocity = random_heading(o.rng, o.config.speed);
      b.until_reaim = next_reaim(o.rng, o.config);
    }
    advance(b, inner, remaining);
    b.until_reaim -= remaining;
  }
  o.clock += dt;
  return o;
}

bool head_inside(const Bubble& bubble, const Vec3& head) { return (head - bubble.center).norm() <= bubble.radius(); }

std::vector<NoteEvent> note_events(std::span<const Vec3> heads, const BubbleTrajectory& trajectory, double dt,
                                   double t0) {
  if (heads.size() != trajectory.size()) {
    throw MisalignedTraces(fmt::format("{} head samples vs {} bubble frames", heads.size(), trajectory.size()));
  }
  std::vector<NoteEvent> out;
  if (trajectory.empty()) return out;
  const std::size_t n = trajectory.front().size();
  std::vector<bool> inside(n, false);
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const auto& frame = trajectory[k];
    if (frame.size() != n) throw MisalignedTraces(fmt::format("frame {} has {} bubbles, expected {}", k, frame.size(), n));
    const double t = t0 + static_cast<double>(k) * dt;
    for (std::size_t i = 0; i < n; ++i) {
      const bool now = head_inside(frame[i], heads[k]);
      if (now == inside[i]) continue;
      out.push_back({t, frame[i].id, frame[i].chord, now ? NoteKind::On : NoteKind::Off});
      inside[i] = now;
    }
  }
  return out;
}

std::vector<Bubble> accessibility_set_height(std::vector<Bubble> bubbles, double altitude) {
  if (!(altitude > 0.0)) throw InvalidAltitude(fmt::format("altitude {} must be positive", altitude));
  for (auto& b : bubbles) b.center.z() = altitude;
  return bubbles;
}

Orchestra accessibility_set_height(Orchestra o, double altitude) {
  o.bubbles = accessibility_set_height(std::move(o.bubbles), altitude);
  o.config.altitude = altitude;
  return o;
}

std::string notes_to_jsonl(std::span<const NoteEvent> events) {
  std::string out;
  for (const auto& e : events) {
    const nlohmann::json j = {{"t", e.time}, {"bubble", e.bubble}, {"chord", e.chord}, {"kind", e.kind == NoteKind::On ? "on" : "off"}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<NoteEvent> notes_from_jsonl(const std::string& text) {
  std::vector<NoteEvent> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind != "on" && kind != "off") throw NoteStreamError("bad kind '" + kind + "'");
      out.push_back({j.at("t").get<double>(), j.at("bubble").get<int>(), j.at("chord").get<std::string>(),
                     kind == "on" ? NoteKind::On : NoteKind::Off});
    } catch (const nlohmann::json::exception& e) {
      throw NoteStreamError(e.what());
    }
  }
  return out;
}

std::string notes_csv(std::span<const NoteEvent> events) {
  std::string out = "t,bubble,chord,kind\n";
  for (const auto& e : events) {
    out += fmt::format("{:.6f},{},{},{}\n", e.time, e.bubble, e.chord, e.kind == NoteKind::On ? "on" : "off");
  }
  return out;
}

}  // namespace artheater::bubbles
