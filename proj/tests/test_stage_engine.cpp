#include <artheater/stage/engine.hpp>

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>

using namespace artheater;
using namespace artheater::stage;

namespace {

// Piecewise-linear walk with dwell stops, evaluated analytically at any t.
struct ScriptedPath {
  struct Leg {
    Vec2 to;
    double dwell;
  };
  Vec2 start;
  double speed;
  std::vector<Leg> legs;

  Vec2 at(double t) const {
    Vec2 p = start;
    for (const auto& leg : legs) {
      const double travel = (leg.to - p).norm() / speed;
      if (t <= travel) return p + (leg.to - p) * (t / travel);
      t -= travel;
      p = leg.to;
      if (t <= leg.dwell) return p;
      t -= leg.dwell;
    }
    return p;
  }
};

CueSheet line_sheet(double clip, int stages = 1) {
  CueSheet sheet;
  for (int s = 0; s < stages; ++s) {
    Stage st;
    st.theme = "S" + std::to_string(s);
    st.spiral = {24, 0};
    for (int i = 0; i < 3; ++i) {
      ContentZone z;
      z.id = st.theme + "z" + std::to_string(i);
      z.center = {4.0 + 8.0 * i, 0.0};
      z.clip = {z.id + "-clip", clip};
      st.zones.push_back(z);
    }
    sheet.stages.push_back(st);
  }
  return sheet;
}

std::vector<StageEvent> run(const CueSheet& sheet, const std::function<Vec2(double)>& walker, double dt, double t_max) {
  StageState s = initial_state(sheet);
  std::vector<StageEvent> all;
  for (std::uint64_t k = 1; k * dt <= t_max && !s.ended; ++k) {
    Pose pose;
    pose.position = walker(static_cast<double>(k) * dt);
    auto [next, ev] = step(std::move(s), sheet, pose, dt);
    s = std::move(next);
    all.insert(all.end(), ev.begin(), ev.end());
  }
  return all;
}

int count(const std::vector<StageEvent>& ev, EventKind k) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [&](const StageEvent& e) { return e.kind == k; }));
}

}  // namespace

TEST_CASE("zone default area and shapes") {
  ContentZone z;
  CHECK(z.area() == doctest::Approx(2.8));
  CHECK(z.contains(Vec2(kDefaultZoneRadius, 0)));
  CHECK_FALSE(z.contains(Vec2(kDefaultZoneRadius + 1e-6, 0)));
  z.shape = Square{2.0};
  CHECK(z.contains(Vec2(1, 1)));
  CHECK_FALSE(z.contains(Vec2(1.01, 0)));
}

TEST_CASE("trigger_check boundary and one-shot") {
  LocationTrigger t{{0, 0}, 1.0, true, "x"};
  Pose p;
  p.position = {1.0, 0.0};
  CHECK(trigger_check(t, p, false));
  CHECK_FALSE(trigger_check(t, p, true));
  t.one_shot = false;
  CHECK(trigger_check(t, p, true));
  p.position = {1.0, 0.01};
  CHECK_FALSE(trigger_check(t, p, false));
}

TEST_CASE("one-shot trigger fires once at any sampling rate") {
  const LocationTrigger t{{10, 0.3}, 1.0, true, "path"};
  for (double hz : {10.0, 50.0, 1000.0}) {
    bool fired = false;
    int fires = 0;
    const double dt = 1.0 / hz;
    for (int k = 0; k * dt <= 20.0; ++k) {
      Pose p;
      p.position = {1.4 * k * dt, 0.0};
      if (trigger_check(t, p, fired)) {
        fired = true;
        ++fires;
      }
    }
    CHECK(fires == 1);
  }
}

TEST_CASE("entering a zone starts its clip, which ends after its duration") {
  CueSheet sheet = line_sheet(15.0);
  const double dt = 0.02;
  auto ev = run(sheet, [](double) { return Vec2(4, 0); }, dt, 40.0);
  REQUIRE(ev.size() >= 3);
  CHECK(ev[0].kind == EventKind::TriggerFired);
  CHECK(ev[1].kind == EventKind::ClipStarted);
  CHECK(ev[2].kind == EventKind::ClipEnded);
  CHECK(ev[2].time - ev[1].time == doctest::Approx(15.0).epsilon(1e-9));
  CHECK(count(ev, EventKind::SpiralSpawned) == 0);
}

TEST_CASE("clip keeps playing after the walker leaves") {
  CueSheet sheet = line_sheet(10.0);
  auto ev = run(sheet, [](double t) { return t < 1.0 ? Vec2(4, 0) : Vec2(4, 5); }, 0.02, 20.0);
  REQUIRE(count(ev, EventKind::ClipEnded) == 1);
}

TEST_CASE("stage timeline matches closed-form oracle") {
  const double v = 1.4, clip = 17.0, r = kDefaultZoneRadius, dt = 0.02;
  CueSheet sheet = line_sheet(clip);
  ScriptedPath path{{0, 0}, v, {{{4, 0}, clip}, {{12, 0}, clip}, {{20, 0}, clip}, {{26, 0}, 0}}};
  auto ev = run(sheet, [&](double t) { return path.at(t); }, dt, 200.0);

  // Oracle: boundary-crossing times along the straight path.
  const double t1 = (4 - r) / v;
  const double t2 = 4 / v + clip + (8 - r) / v;
  const double t3 = 12 / v + 2 * clip + (8 - r) / v;
  const double spiral = t3 + clip;
  const double end = 20 / v + 3 * clip + 3 / v;  // leaves zone 3 center, reaches spiral disc edge at x=23

  std::map<std::string, double> started, ended;
  double spawned = -1, play_end = -1;
  for (const auto& e : ev) {
    if (e.kind == EventKind::ClipStarted) started[e.subject] = e.time;
    if (e.kind == EventKind::ClipEnded) ended[e.subject] = e.time;
    if (e.kind == EventKind::SpiralSpawned) spawned = e.time;
    if (e.kind == EventKind::PlayEnded) play_end = e.time;
  }
  const double tol = 2 * dt + 1e-9;
  CHECK(std::abs(started["S0z0"] - t1) <= tol);
  CHECK(std::abs(started["S0z1"] - t2) <= tol);
  CHECK(std::abs(started["S0z2"] - t3) <= tol);
  CHECK(std::abs(ended["S0z2"] - (t3 + clip)) <= tol);
  CHECK(std::abs(spawned - spiral) <= tol);
  CHECK(std::abs(play_end - end) <= tol);
  CHECK(end == doctest::Approx(3 * 17 + 2 * (8 / 1.4) + 4 / 1.4 + 3 / 1.4));

  const auto timing = stage_timing_report(ev);
  REQUIRE(timing.durations.size() == 1);
  CHECK(std::abs(timing.durations[0] - end) <= tol);
  CHECK(timing.visit_order[0] == std::vector<std::string>{"S0z0", "S0z1", "S0z2"});
}

TEST_CASE("exactly one spiral per stage, never before all clips are done") {
  CueSheet sheet = line_sheet(5.0, 3);
  ScriptedPath lap{{0, 0}, 1.4, {{{4, 0}, 5}, {{12, 0}, 5}, {{20, 0}, 5}, {{24, 0}, 0}}};
  // Walk the same lap three times; stage changes reset zone status.
  const double lap_time = 24 / 1.4 + 15 + 1e-3;
  auto walker = [&](double t) {
    const double local = std::fmod(t, lap_time + 24 / 1.4);
    if (local <= lap_time) return lap.at(local);
    return Vec2(24 - 1.4 * (local - lap_time), 0);
  };
  auto ev = run(sheet, walker, 0.02, 600.0);
  CHECK(count(ev, EventKind::SpiralSpawned) == 3);
  CHECK(count(ev, EventKind::StageAdvanced) == 2);
  CHECK(count(ev, EventKind::PlayEnded) == 1);

  int done_in_stage = 0;
  for (const auto& e : ev) {
    if (e.kind == EventKind::ClipEnded) ++done_in_stage;
    if (e.kind == EventKind::SpiralSpawned) {
      CHECK(done_in_stage == 3);
      done_in_stage = 0;
    }
  }
  for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i].time >= ev[i - 1].time);
}

TEST_CASE("visit order is free") {
  CueSheet sheet = line_sheet(3.0);
  ScriptedPath reversed{{26, 0}, 1.4, {{{20, 0}, 3}, {{20, 3}, 0}, {{4, 3}, 0}, {{4, 0}, 3}, {{12, 0}, 3}, {{24, 0}, 0}}};
  auto ev = run(sheet, [&](double t) { return reversed.at(t); }, 0.02, 200.0);
  CHECK(count(ev, EventKind::PlayEnded) == 1);
  const auto timing = stage_timing_report(ev);
  CHECK(timing.visit_order[0] == std::vector<std::string>{"S0z2", "S0z0", "S0z1"});
}

TEST_CASE("identical inputs produce identical event streams") {
  CueSheet sheet = corridor_sheet();
  ScriptedPath p{{1, 2}, 1.4, {{{5, 2}, 24}, {{13, 2}, 28}, {{21, 2}, 30}, {{25, 2}, 0}}};
  auto a = run(sheet, [&](double t) { return p.at(t); }, 0.02, 150.0);
  auto b = run(sheet, [&](double t) { return p.at(t); }, 0.02, 150.0);
  CHECK(a == b);
  CHECK(events_from_jsonl(events_to_jsonl(a)) == a);
}

TEST_CASE("stage_timing_report") {
  std::vector<StageEvent> ev = {{0.0, EventKind::ClipStarted, "a"}, {10.0, EventKind::ClipEnded, "a"},
                                {10.0, EventKind::ClipStarted, "b"}, {30.0, EventKind::ClipEnded, "b"},
                                {30.0, EventKind::ClipStarted, "c"}, {60.0, EventKind::ClipEnded, "c"},
                                {60.0, EventKind::SpiralSpawned, "s"}, {60.0, EventKind::PlayEnded, "s"}};
  auto r = stage_timing_report(ev, {{0, {0, 0}}, {30, {3, 4}}, {60, {3, 4}}});
  REQUIRE(r.durations.size() == 1);
  CHECK(r.durations[0] == doctest::Approx(60.0));
  CHECK(r.total_distance == doctest::Approx(5.0));
  CHECK(r.distances[0] == doctest::Approx(5.0));

  std::vector<StageEvent> three = {{100, EventKind::StageAdvanced, "b"}, {190, EventKind::StageAdvanced, "c"},
                                   {300, EventKind::PlayEnded, "c"}};
  r = stage_timing_report(three);
  CHECK(r.durations == std::vector<double>{100, 90, 110});

  std::swap(three[0], three[1]);
  CHECK_THROWS_AS(stage_timing_report(three), MalformedEventStream);
}

TEST_CASE("cue sheet JSON and validation") {
  const CueSheet sheet = corridor_sheet();
  const auto j = cue_sheet_to_json(sheet);
  const CueSheet back = cue_sheet_from_json(j);
  CHECK(cue_sheet_to_json(back) == j);
  CHECK(back.stages.size() == 3);

  auto close = j;
  close["stages"][0]["zones"][1]["center"] = {5.5, 2.0};
  CHECK_THROWS_AS(cue_sheet_from_json(close), CueSheetError);
  auto empty = j;
  empty["stages"] = nlohmann::json::array();
  CHECK_THROWS_AS(cue_sheet_from_json(empty), CueSheetError);
  auto bad_clip = j;
  bad_clip["stages"][2]["zones"][0]["clip"]["duration"] = 0;
  CHECK_THROWS_AS(cue_sheet_from_json(bad_clip), CueSheetError);
}

TEST_CASE("guidance_target follows stage progress") {
  CueSheet sheet = line_sheet(1.0);
  StageState s = initial_state(sheet);
  CHECK(*guidance_target(s, sheet, {0, 0}) == Vec2(4, 0));
  CHECK(*guidance_target(s, sheet, {19, 0}) == Vec2(20, 0));
  s.spiral_active = true;
  CHECK(*guidance_target(s, sheet, {0, 0}) == Vec2(24, 0));
}
