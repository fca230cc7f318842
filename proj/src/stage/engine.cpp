#include <artheater/stage/engine.hpp>

#include <algorithm>
#include <limits>
#include <sstream>

namespace artheater::stage {

using nlohmann::json;

bool ContentZone::contains(const Vec2& p) const {
  if (const auto* c = std::get_if<Circle>(&shape)) return (p - center).norm() <= c->radius;
  const double h = std::get<Square>(shape).side / 2.0;
  const Vec2 d = (p - center).cwiseAbs();
  return d.x() <= h && d.y() <= h;
}

double ContentZone::area() const {
  if (const auto* c = std::get_if<Circle>(&shape)) return kPi * c->radius * c->radius;
  const double s = std::get<Square>(shape).side;
  return s * s;
}

bool trigger_check(const LocationTrigger& trigger, const Pose& pose, bool fired_before) {
  if (trigger.one_shot && fired_before) return false;
  return (pose.position - trigger.center).norm() <= trigger.radius;
}

void validate(const CueSheet& sheet) {
  if (sheet.stages.empty()) throw CueSheetError("cue sheet has no stages");
  for (const auto& st : sheet.stages) {
    if (st.zones.empty()) throw CueSheetError("stage '" + st.theme + "' has no zones");
    if (!(st.spiral_radius > 0)) throw CueSheetError("stage '" + st.theme + "' spiral radius must be positive");
    for (std::size_t i = 0; i < st.zones.size(); ++i) {
      const auto& z = st.zones[i];
      if (!(z.area() > 0)) throw CueSheetError("zone '" + z.id + "' has no area");
      if (!(z.clip.duration > 0)) throw CueSheetError("clip of zone '" + z.id + "' has non-positive duration");
      for (std::size_t j = i + 1; j < st.zones.size(); ++j) {
        if ((z.center - st.zones[j].center).norm() < 2.0) {
          throw CueSheetError("zones '" + z.id + "' and '" + st.zones[j].id + "' are closer than 2 m");
        }
      }
    }
    for (const auto& t : st.triggers) {
      if (!(t.radius > 0)) throw CueSheetError("trigger radius must be positive");
    }
  }
}

namespace {

void enter_stage(StageState& s, const CueSheet& sheet) {
  const auto& st = sheet.stages[static_cast<std::size_t>(s.stage)];
  s.zones.assign(st.zones.size(), ZoneStatus::Unvisited);
  s.clip_started_at.assign(st.zones.size(), 0.0);
  s.trigger_fired.assign(st.triggers.size(), false);
  s.spiral_active = false;
}

constexpr double kClockSlack = 1e-9;

}  // namespace

StageState initial_state(const CueSheet& sheet) {
  validate(sheet);
  StageState s;
  enter_stage(s, sheet);
  return s;
}

std::pair<StageState, std::vector<StageEvent>> step(StageState s, const CueSheet& sheet, const Pose& pose,
                                                    double dt) {
  std::vector<StageEvent> ev;
  if (s.ended) return {std::move(s), std::move(ev)};
  ++s.ticks;
  s.clock += dt;
  const double now = s.clock;
  const auto& st = sheet.stages[static_cast<std::size_t>(s.stage)];

  for (std::size_t i = 0; i < st.zones.size(); ++i) {
    if (s.zones[i] == ZoneStatus::Playing && now - s.clip_started_at[i] >= st.zones[i].clip.duration - kClockSlack) {
      s.zones[i] = ZoneStatus::Done;
      ev.push_back({now, EventKind::ClipEnded, st.zones[i].id});
    }
  }

  for (std::size_t i = 0; i < st.triggers.size(); ++i) {
    if (trigger_check(st.triggers[i], pose, s.trigger_fired[i])) {
      s.trigger_fired[i] = true;
      ev.push_back({now, EventKind::TriggerFired, st.triggers[i].payload});
    }
  }

  for (std::size_t i = 0; i < st.zones.size(); ++i) {
    if (s.zones[i] == ZoneStatus::Unvisited && st.zones[i].contains(pose.position)) {
      s.zones[i] = ZoneStatus::Playing;
      s.clip_started_at[i] = now;
      ev.push_back({now, EventKind::TriggerFired, st.zones[i].id});
      ev.push_back({now, EventKind::ClipStarted, st.zones[i].id});
    }
  }

  const bool all_done = std::all_of(s.zones.begin(), s.zones.end(), [](ZoneStatus z) { return z == ZoneStatus::Done; });
  if (all_done && !s.spiral_active) {
    s.spiral_active = true;
    ev.push_back({now, EventKind::SpiralSpawned, st.theme});
  }

  if (s.spiral_active && (pose.position - st.spiral).norm() <= st.spiral_radius) {
    if (s.stage + 1 == static_cast<int>(sheet.stages.size())) {
      s.ended = true;
      s.spiral_active = false;
      ev.push_back({now, EventKind::PlayEnded, st.theme});
    } else {
      ++s.stage;
      enter_stage(s, sheet);
      ev.push_back({now, EventKind::StageAdvanced, sheet.stages[static_cast<std::size_t>(s.stage)].theme});
    }
  }
  return {std::move(s), std::move(ev)};
}

std::optional<Vec2> guidance_target(const StageState& state, const CueSheet& sheet, const Vec2& from) {
  if (state.ended) return std::nullopt;
  const auto& st = sheet.stages[static_cast<std::size_t>(state.stage)];
  if (state.spiral_active) return st.spiral;
  std::optional<Vec2> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < st.zones.size(); ++i) {
    if (state.zones[i] != ZoneStatus::Unvisited) continue;
    const double d = (st.zones[i].center - from).norm();
    if (d < best_d) {
      best_d = d;
      best = st.zones[i].center;
    }
  }
  return best;
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TriggerFired: return "TriggerFired";
    case EventKind::ClipStarted: return "ClipStarted";
    case EventKind::ClipEnded: return "ClipEnded";
    case EventKind::SpiralSpawned: return "SpiralSpawned";
    case EventKind::StageAdvanced: return "StageAdvanced";
    case EventKind::PlayEnded: return "PlayEnded";
  }
  return "?";
}

EventKind event_kind_from_string(const std::string& s) {
  for (auto k : {EventKind::TriggerFired, EventKind::ClipStarted, EventKind::ClipEnded, EventKind::SpiralSpawned,
                 EventKind::StageAdvanced, EventKind::PlayEnded}) {
    if (to_string(k) == s) return k;
  }
  throw MalformedEventStream("unknown event kind '" + s + "'");
}

std::string to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::Particle: return "Particle";
    case GuidanceMode::Arrow: return "Arrow";
    case GuidanceMode::None: return "None";
  }
  return "?";
}

GuidanceMode guidance_mode_from_string(const std::string& s) {
  if (s == "Particle") return GuidanceMode::Particle;
  if (s == "Arrow") return GuidanceMode::Arrow;
  if (s == "None") return GuidanceMode::None;
  throw CueSheetError("unknown guidance mode '" + s + "'");
}

StageTiming stage_timing_report(const std::vector<StageEvent>& events, const std::vector<TimedPosition>& trace) {
  StageTiming r;
  double stage_start = 0.0;
  double last = -std::numeric_limits<double>::infinity();
  bool ended = false;
  std::vector<double> boundaries = {0.0};
  r.visit_order.emplace_back();

  for (const auto& e : events) {
    if (e.time < last) throw MalformedEventStream("event times decrease");
    if (ended) throw MalformedEventStream("event after PlayEnded");
    last = e.time;
    if (e.kind == EventKind::ClipStarted) r.visit_order.back().push_back(e.subject);
    if (e.kind == EventKind::StageAdvanced || e.kind == EventKind::PlayEnded) {
      r.durations.push_back(e.time - stage_start);
      stage_start = e.time;
      boundaries.push_back(e.time);
      if (e.kind == EventKind::PlayEnded) {
        ended = true;
      } else {
        r.visit_order.emplace_back();
      }
    }
  }
  if (!ended) {
    // Open last stage: measured up to the final event or trace sample.
    double end = last;
    if (!trace.empty()) end = std::max(end, trace.back().t);
    if (std::isfinite(end)) {
      r.durations.push_back(end - stage_start);
      boundaries.push_back(end);
    } else {
      r.visit_order.pop_back();
    }
  }

  r.distances.assign(r.durations.size(), 0.0);
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const double step = (trace[k].position - trace[k - 1].position).norm();
    r.total_distance += step;
    // Attribute the step to the stage containing its end time.
    for (std::size_t s = 0; s + 1 < boundaries.size(); ++s) {
      if (trace[k].t > boundaries[s] && trace[k].t <= boundaries[s + 1]) {
        r.distances[s] += step;
        break;
      }
    }
  }
  return r;
}

namespace {

json vec(const Vec2& p) { return json::array({p.x(), p.y()}); }
Vec2 read_vec(const json& j) {
  if (!j.is_array() || j.size() != 2) throw CueSheetError("expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json cue_sheet_to_json(const CueSheet& sheet) {
  json j;
  j["version"] = 1;
  j["stages"] = json::array();
  for (const auto& st : sheet.stages) {
    json js;
    js["theme"] = st.theme;
    js["guidance"] = to_string(st.guidance);
    js["spiral"] = vec(st.spiral);
    js["spiral_radius"] = st.spiral_radius;
    js["zones"] = json::array();
    for (const auto& z : st.zones) {
      json shape;
      if (const auto* c = std::get_if<Circle>(&z.shape)) {
        shape["circle"] = c->radius;
      } else {
        shape["square"] = std::get<Square>(z.shape).side;
      }
      js["zones"].push_back(
          {{"id", z.id}, {"center", vec(z.center)}, {"shape", shape}, {"clip", {{"id", z.clip.id}, {"duration", z.clip.duration}}}});
    }
    js["triggers"] = json::array();
    for (const auto& t : st.triggers) {
      js["triggers"].push_back({{"center", vec(t.center)}, {"radius", t.radius}, {"one_shot", t.one_shot}, {"payload", t.payload}});
    }
    j["stages"].push_back(js);
  }
  return j;
}

CueSheet cue_sheet_from_json(const json& j) {
  CueSheet sheet;
  try {
    if (j.value("version", 0) != 1) throw CueSheetError("unsupported cue sheet version");
    for (const auto& js : j.at("stages")) {
      Stage st;
      st.theme = js.at("theme").get<std::string>();
      st.guidance = guidance_mode_from_string(js.value("guidance", std::string("None")));
      st.spiral = read_vec(js.at("spiral"));
      st.spiral_radius = js.value("spiral_radius", kDefaultTriggerRadius);
      for (const auto& jz : js.at("zones")) {
        ContentZone z;
        z.id = jz.at("id").get<std::string>();
        z.center = read_vec(jz.at("center"));
        if (jz.contains("shape")) {
          const auto& sh = jz["shape"];
          if (sh.contains("circle")) {
            z.shape = Circle{sh["circle"].get<double>()};
          } else if (sh.contains("square")) {
            z.shape = Square{sh["square"].get<double>()};
          } else {
            throw CueSheetError("zone shape must be circle or square");
          }
        }
        z.clip.id = jz.at("clip").value("id", z.id);
        z.clip.duration = jz.at("clip").at("duration").get<double>();
        st.zones.push_back(std::move(z));
      }
      if (js.contains("triggers")) {
        for (const auto& jt : js["triggers"]) {
          LocationTrigger t;
          t.center = read_vec(jt.at("center"));
          t.radius = jt.value("radius", kDefaultTriggerRadius);
          t.one_shot = jt.value("one_shot", true);
          t.payload = jt.value("payload", std::string());
          st.triggers.push_back(std::move(t));
        }
      }
      sheet.stages.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw CueSheetError(e.what());
  }
  validate(sheet);
  return sheet;
}

std::string events_to_jsonl(const std::vector<StageEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += json{{"time", e.time}, {"kind", to_string(e.kind)}, {"subject", e.subject}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<StageEvent> events_from_jsonl(const std::string& text) {
  std::vector<StageEvent> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("time").get<double>(), event_kind_from_string(j.at("kind").get<std::string>()),
                     j.at("subject").get<std::string>()});
    } catch (const json::exception& e) {
      throw MalformedEventStream(e.what());
    }
  }
  return out;
}

CueSheet corridor_sheet() {
  CueSheet sheet;
  const double durations[3] = {24.0, 28.0, 30.0};
  auto make_stage = [&](std::string theme, GuidanceMode mode, std::vector<double> xs, double spiral_x) {
    Stage st;
    st.theme = theme;
    st.guidance = mode;
    st.spiral = {spiral_x, 2.0};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ContentZone z;
      z.id = theme.substr(0, 2) + std::to_string(i + 1);
      z.center = {xs[i], 2.0};
      z.clip = {theme + "-dance-" + std::to_string(i + 1), durations[i]};
      st.zones.push_back(z);
    }
    return st;
  };
  sheet.stages.push_back(make_stage("Future", GuidanceMode::Particle, {5.0, 13.0, 21.0}, 25.0));
  sheet.stages.push_back(make_stage("Fantasy", GuidanceMode::Arrow, {19.0, 11.0, 3.0}, 1.5));
  sheet.stages.push_back(make_stage("Forest", GuidanceMode::None, {5.0, 13.0, 21.0}, 25.0));
  return sheet;
}

}  // namespace artheater::stage
