#include <artheater/distortion/distortion.hpp>

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>


namespace artheater::distortion {

void RoomModel::validate() const {
  if (!(width > 0 && length > 0 && height > 0 && tile > 0 && reference_volume > 0)) {
    throw TreatmentConfigError("room dimensions must be positive");
  }
}

void DistortionTreatment::validate() const {
  if (!(elongation > 0 && warp_angle_deg > 0 && warp_length > 0 && shift > 0 && elevation > 0 && enlarge_factor > 0)) {
    throw TreatmentConfigError("treatment parameters must be positive");
  }
}

const char* to_string(TreatmentKind k) {
  switch (k) {
    case TreatmentKind::Elongation: return "elongation";
    case TreatmentKind::Warp: return "warp";
    case TreatmentKind::Shift: return "shift";
    case TreatmentKind::Elevation: return "elevation";
    case TreatmentKind::Enlarge: return "enlarge";
  }
  return "?";
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Apply: return "apply";
    case Phase::Return: return "return";
    case Phase::Hold: return "hold";
  }
  return "?";
}

TreatmentKind treatment_kind_from_string(const std::string& s) {
  for (auto k : {TreatmentKind::Elongation, TreatmentKind::Warp, TreatmentKind::Shift, TreatmentKind::Elevation,
                 TreatmentKind::Enlarge}) {
    if (s == to_string(k)) return k;
  }
  throw TreatmentConfigError("unknown treatment '" + s + "'");
}

namespace {

Phase phase_from_string(const std::string& s) {
  for (auto p : {Phase::Apply, Phase::Return, Phase::Hold}) {
    if (s == to_string(p)) return p;
  }
  throw TreatmentConfigError("unknown phase '" + s + "'");
}

Vec2 plan(const Vec3& p) { return p.head<2>(); }

}  // namespace

Vec3 distort_point(const RoomModel& room, const DistortionTreatment& t, double extent, const Vec3& p) {
  const Vec2 a = room.short_axis();
  const Vec2 b = room.long_axis();
  const Vec2 c = room.center();
  const Vec2 rel = plan(p) - c;
  const double u = rel.dot(a);
  const double s = rel.dot(b);

  switch (t.kind) {
    case TreatmentKind::Elongation: {
      // The wall at u = +W/2 recedes; the opposite wall stays put.
      const double w = room.short_extent();
      const Vec2 q = plan(p) + a * (t.elongation * extent * (u + w / 2) / w);
      return {q.x(), q.y(), p.z()};
    }
    case TreatmentKind::Warp: {
      const double k = t.warp_curvature(extent);
      if (k == 0.0) return p;
      // Circular-arc bend of the long axis toward +a.
      const double th = k * s;
      const double sh = std::sin(th / 2);
      const Vec2 centerline = c + a * (2 * sh * sh / k) + b * (std::sin(th) / k);
      const Vec2 normal = a * std::cos(th) - b * std::sin(th);
      const Vec2 q = centerline + u * normal;
      return {q.x(), q.y(), p.z()};
    }
    case TreatmentKind::Shift: {
      const Vec2 q = plan(p) + a * (t.shift * extent);
      return {q.x(), q.y(), p.z()};
    }
    case TreatmentKind::Elevation:
      return {p.x(), p.y(), p.z() + t.elevation * extent};
    case TreatmentKind::Enlarge: {
      const double f = 1.0 + (t.enlarge_factor - 1.0) * extent;
      const Vec2 q = c + f * rel;
      return {q.x(), q.y(), f * p.z()};
    }
  }
  return p;
}

double phase_extent(Phase phase, double progress) {
  if (!(progress >= 0.0 && progress <= 1.0)) throw InvalidProgress(fmt::format("progress {} outside [0, 1]", progress));
  switch (phase) {
    case Phase::Apply: return progress;
    case Phase::Return: return 1.0 - progress;
    case Phase::Hold: break;
  }
  throw TreatmentConfigError("hold has no extent of its own");
}

Box3 RoomGeometry::bounds() const {
  Box3 b{Vec3::Constant(std::numeric_limits<double>::infinity()), Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& v : vertices) {
    b.min = b.min.cwiseMin(v);
    b.max = b.max.cwiseMax(v);
  }
  return b;
}

RoomGeometry room_geometry(const RoomModel& room, int divisions) {
  room.validate();
  const int n = std::max(1, divisions);
  const Box3 box = room.box();
  const Vec3 e = box.max - box.min;
  RoomGeometry g;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      for (int k = 0; k <= n; ++k) {
        const bool surface = i == 0 || i == n || j == 0 || j == n || k == 0 || k == n;
        if (!surface) continue;
        const auto at = [n](double lo, double ext, int idx) { return idx == n ? lo + ext : lo + ext * idx / n; };
        g.vertices.emplace_back(at(box.min.x(), e.x(), i), at(box.min.y(), e.y(), j), at(box.min.z(), e.z(), k));
      }
    }
  }
  return g;
}

RoomGeometry treatment_geometry(const RoomModel& room, const DistortionTreatment& t, Phase phase, double progress,
                                int divisions) {
  t.validate();
  const double extent = phase_extent(phase, progress);
  RoomGeometry g = room_geometry(room, divisions);
  for (auto& v : g.vertices) v = distort_point(room, t, extent, v);
  return g;
}

double volume_ratio(const RoomModel& room, const DistortionTreatment& t, double extent) {
  const double base = room_geometry(room, 2).bounds().volume();
  RoomGeometry g = room_geometry(room, 24);
  for (auto& v : g.vertices) v = distort_point(room, t, extent, v);
  return g.bounds().volume() / base;
}

double virtual_floor_area(const RoomModel& room, const DistortionTreatment& t, double extent) {
  using boost::math::quadrature::gauss;
  const Box2 f = room.floor();
  const double h = 1e-6;
  const auto det = [&](double x, double y) {
    const auto m = [&](double px, double py) { return plan(distort_point(room, t, extent, {px, py, 0.0})); };
    const Vec2 dx = (m(x + h, y) - m(x - h, y)) / (2 * h);
    const Vec2 dy = (m(x, y + h) - m(x, y - h)) / (2 * h);
    return std::abs(dx.x() * dy.y() - dx.y() * dy.x());
  };
  return gauss<double, 10>::integrate(
      [&](double y) { return gauss<double, 10>::integrate([&](double x) { return det(x, y); }, f.min.x(), f.max.x()); },
      f.min.y(), f.max.y());
}

TreatmentTimeline TreatmentTimeline::standard() {
  TreatmentTimeline t;
  for (int cycle = 0; cycle < 2; ++cycle) {
    t.segments.push_back({Phase::Apply, 10.0});
    t.segments.push_back({Phase::Hold, 5.0});
    t.segments.push_back({Phase::Return, 10.0});
    t.segments.push_back({Phase::Hold, 5.0});
  }
  return t;
}

double TreatmentTimeline::total() const {
  double s = 0.0;
  for (const auto& seg : segments) s += seg.duration;
  return s;
}

void TreatmentTimeline::validate() const {
  if (segments.empty()) throw TreatmentConfigError("empty timeline");
  Phase expect = Phase::Apply;
  for (const auto& seg : segments) {
    if (!(seg.duration > 0.0)) throw TreatmentConfigError("segment durations must be positive");
    if (seg.phase == Phase::Hold) continue;
    if (seg.phase != expect) throw TreatmentConfigError("apply and return segments must alternate, starting with apply");
    expect = expect == Phase::Apply ? Phase::Return : Phase::Apply;
  }
}

TimelineSample timeline_step(const TreatmentTimeline& timeline, double t) {
  const double total = timeline.total();
  if (!(t >= 0.0 && t <= total)) throw OutOfRange(fmt::format("t = {} outside [0, {}]", t, total));
  double start = 0.0;
  double extent = 0.0;
  for (std::size_t i = 0; i < timeline.segments.size(); ++i) {
    const auto& seg = timeline.segments[i];
    const bool last = i + 1 == timeline.segments.size();
    if (t <= start + seg.duration || last) {
      const double progress = std::clamp((t - start) / seg.duration, 0.0, 1.0);
      TimelineSample s{seg.phase, progress, extent, static_cast<int>(i)};
      if (seg.phase != Phase::Hold) s.extent = phase_extent(seg.phase, progress);
      return s;
    }
    if (seg.phase == Phase::Apply) extent = 1.0;
    if (seg.phase == Phase::Return) extent = 0.0;
    start += seg.duration;
  }
  throw OutOfRange("empty timeline");
}

std::vector<StimulusWindow> stimulus_windows(const TreatmentTimeline& timeline) {
  std::vector<StimulusWindow> out;
  double start = 0.0;
  for (std::size_t i = 0; i < timeline.segments.size(); ++i) {
    const auto& seg = timeline.segments[i];
    if (seg.phase != Phase::Hold) out.push_back({static_cast<int>(i), seg.phase, start, start + seg.duration});
    start += seg.duration;
  }
  return out;
}

int target_population(const Box3& bounds, const ParticleFieldConfig& config) {
  return static_cast<int>(std::lround(config.density * std::max(0.0, bounds.volume())));
}

namespace {

Vec3 random_direction(Rng& rng) {
  for (;;) {
    const Vec3 g(gaussian(rng), gaussian(rng), gaussian(rng));
    const double n = g.norm();
    if (n > 1e-12) return g / n;
  }
}

FieldParticle spawn(const Box3& bounds, double r, Rng& rng) {
  FieldParticle p;
  for (int d = 0; d < 3; ++d) {
    const double lo = bounds.min[d] + r, hi = bounds.max[d] - r;
    p.position[d] = hi > lo ? uniform(rng, lo, hi) : 0.5 * (bounds.min[d] + bounds.max[d]);
  }
  p.direction = random_direction(rng);
  return p;
}

/// Folds a coordinate back into [lo, hi] as if it bounced off both ends;
/// returns true when an odd number of bounces flipped its direction.
bool fold(double& x, double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0.0)) {
    x = 0.5 * (lo + hi);
    return false;
  }
  if (x >= lo && x <= hi) return false;
  const double q = (x - lo) / span;
  const double k = std::floor(q);
  const double frac = q - k;
  const bool odd = std::fmod(std::abs(k), 2.0) == 1.0;
  x = odd ? hi - frac * span : lo + frac * span;
  return odd;
}

}  // namespace

ParticleField make_particle_field(const Box3& bounds, const ParticleFieldConfig& config, std::uint64_t seed) {
  ParticleField f;
  f.config = config;
  f.rng = make_rng(seed, 0xf1e1d);
  const int n = target_population(bounds, config);
  f.particles.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) f.particles.push_back(spawn(bounds, config.radius, f.rng));
  return f;
}

ParticleField particle_field_step(ParticleField f, const Box3& bounds, double dt) {
  if (!(dt > 0.0)) throw InvalidTimeStep(fmt::format("dt = {}", dt));
  const auto& c = f.config;
  const double redirect = c.redirect_mean > 0.0 ? 1.0 - std::exp(-dt / c.redirect_mean) : 0.0;
  for (auto& p : f.particles) {
    if (redirect > 0.0 && uniform01(f.rng) < redirect) p.direction = random_direction(f.rng);
    p.position += c.speed * dt * p.direction;
    for (int d = 0; d < 3; ++d) {
      if (fold(p.position[d], bounds.min[d] + c.radius, bounds.max[d] - c.radius)) p.direction[d] = -p.direction[d];
    }
  }
  const auto n = static_cast<std::size_t>(target_population(bounds, c));
  if (f.particles.size() > n) f.particles.resize(n);
  while (f.particles.size() < n) f.particles.push_back(spawn(bounds, c.radius, f.rng));
  return f;
}

namespace {

void check_window(const LocomotionTrace& trace, double t0, double t1) {
  constexpr double tol = 1e-9;
  if (trace.empty() || !(t1 > t0) || t0 < trace.start() - tol || t1 > trace.end() + tol) {
    throw EmptyWindow(fmt::format("window [{}, {}] not inside the trace span", t0, t1));
  }
}

}  // namespace

double axis_movement(const LocomotionTrace& trace, const RoomModel& room, double t0, double t1) {
  check_window(trace, t0, t1);
  return (position_at(trace, t1) - position_at(trace, t0)).dot(room.short_axis());
}

double center_distance_change(const LocomotionTrace& trace, const RoomModel& room, double t0, double t1) {
  check_window(trace, t0, t1);
  return (position_at(trace, t1) - room.center()).norm() - (position_at(trace, t0) - room.center()).norm();
}

double total_walking_distance(const LocomotionTrace& trace) {
  if (trace.samples.size() < 2) throw TooFewSamples("need at least two samples");
  double d = 0.0;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    d += (trace.samples[i].position - trace.samples[i - 1].position).norm();
  }
  return d;
}

TraceMetrics trace_metrics(const LocomotionTrace& trace, const RoomModel& room, const TreatmentTimeline& timeline) {
  TraceMetrics m;
  for (const auto& w : stimulus_windows(timeline)) {
    m.segments.push_back({w, axis_movement(trace, room, w.t0, w.t1), center_distance_change(trace, room, w.t0, w.t1)});
  }
  m.total_walking_distance = total_walking_distance(trace);
  return m;
}

std::string metrics_csv_header() {
  return "trace,segment,phase,t0,t1,axis_movement,center_distance_change,total_walking_distance\n";
}

std::string metrics_csv_rows(const std::string& trace_id, const TraceMetrics& m) {
  std::string out;
  for (const auto& s : m.segments) {
    out += fmt::format("{},{},{},{:.3f},{:.3f},{:.6f},{:.6f},{:.6f}\n", trace_id, s.window.segment,
                       to_string(s.window.phase), s.window.t0, s.window.t1, s.axis_displacement, s.center_change,
                       m.total_walking_distance);
  }
  return out;
}

std::uint64_t DensityMap::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

DensityMap empty_density_map(const RoomModel& room) {
  room.validate();
  DensityMap m;
  m.tile = room.tile;
  m.cols = static_cast<int>(std::ceil(room.width / room.tile - 1e-9));
  m.rows = static_cast<int>(std::ceil(room.length / room.tile - 1e-9));
  m.origin = room.floor().min;
  m.counts.assign(static_cast<std::size_t>(m.cols * m.rows), 0);
  return m;
}

DensityMap density_map(std::span<const LocomotionTrace> traces, const RoomModel& room,
                       std::vector<std::pair<double, double>> windows) {
  DensityMap m = empty_density_map(room);
  m.windows = std::move(windows);
  const Box2 floor = room.floor();
  for (const auto& trace : traces) {
    for (const auto& s : trace.samples) {
      const bool inside = std::any_of(m.windows.begin(), m.windows.end(),
                                      [&](const auto& w) { return s.t >= w.first && s.t <= w.second; });
      if (!inside || !floor.contains(s.position)) continue;
      const Vec2 rel = (s.position - m.origin) / m.tile;
      const int col = std::min(static_cast<int>(std::floor(rel.x())), m.cols - 1);
      const int row = std::min(static_cast<int>(std::floor(rel.y())), m.rows - 1);
      ++m.counts[static_cast<std::size_t>(row * m.cols + col)];
    }
  }
  return m;
}

std::vector<std::pair<double, double>> density_windows(const TreatmentTimeline& timeline,
                                                       const DensityWindowSpec& spec) {
  std::vector<std::pair<double, double>> out;
  const double total = timeline.total();
  for (const auto& w : stimulus_windows(timeline)) {
    out.emplace_back(std::max(0.0, w.t1 - spec.before_end), std::min(total, w.t1 + spec.after_end));
  }
  return out;
}

std::string density_to_pgm(const DensityMap& m) {
  std::uint64_t peak = 1;
  for (auto c : m.counts) peak = std::max(peak, c);
  const std::uint64_t maxval = std::min<std::uint64_t>(peak, 65535);
  std::string out = fmt::format("P2\n{} {}\n{}\n", m.cols, m.rows, maxval);
  // PGM rows run top to bottom; put max y on top so the image reads as a plan.
  for (int row = m.rows - 1; row >= 0; --row) {
    for (int col = 0; col < m.cols; ++col) {
      const std::uint64_t v = peak <= 65535 ? m.at(col, row) : m.at(col, row) * 65535 / peak;
      out += fmt::format("{}", v);
      out += col + 1 == m.cols ? '\n' : ' ';
    }
  }
  return out;
}

nlohmann::json density_metadata(const DensityMap& m) {
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& [a, b] : m.windows) windows.push_back({a, b});
  return {{"cols", m.cols},
          {"rows", m.rows},
          {"tile", m.tile},
          {"origin", {m.origin.x(), m.origin.y()}},
          {"indexing", "row-major from the room min corner; pgm is flipped so max y is the top row"},
          {"windows", windows},
          {"total", m.total()},
          {"counts", m.counts}};
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw TreatmentConfigError(std::string(what) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw TreatmentConfigError(fmt::format("unknown {} field '{}'", what, key));
    }
  }
}

}  // namespace

nlohmann::json treatment_to_json(const DistortionTreatment& t) {
  return {{"kind", to_string(t.kind)},     {"elongation", t.elongation}, {"warp_angle_deg", t.warp_angle_deg},
          {"warp_length", t.warp_length},  {"shift", t.shift},           {"elevation", t.elevation},
          {"enlarge_factor", t.enlarge_factor}};
}

DistortionTreatment treatment_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"kind", "elongation", "warp_angle_deg", "warp_length", "shift", "elevation", "enlarge_factor"},
                 "treatment");
  try {
    DistortionTreatment t;
    t.kind = treatment_kind_from_string(j.at("kind").get<std::string>());
    t.elongation = j.value("elongation", t.elongation);
    t.warp_angle_deg = j.value("warp_angle_deg", t.warp_angle_deg);
    t.warp_length = j.value("warp_length", t.warp_length);
    t.shift = j.value("shift", t.shift);
    t.elevation = j.value("elevation", t.elevation);
    t.enlarge_factor = j.value("enlarge_factor", t.enlarge_factor);
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw TreatmentConfigError(e.what());
  }
}

nlohmann::json timeline_to_json(const TreatmentTimeline& t) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : t.segments) segs.push_back({{"phase", to_string(s.phase)}, {"duration", s.duration}});
  return {{"segments", segs}};
}

TreatmentTimeline timeline_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"segments"}, "timeline");
  try {
    TreatmentTimeline t;
    for (const auto& s : j.at("segments")) {
      reject_unknown(s, {"phase", "duration"}, "segment");
      t.segments.push_back({phase_from_string(s.at("phase").get<std::string>()), s.at("duration").get<double>()});
    }
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw TreatmentConfigError(e.what());
  }
}

}  // namespace artheater::distortion
