#include <artheater/geometry/obj.hpp>
#include <artheater/geometry/scene_io.hpp>
#include <artheater/harness/bundle.hpp>
#include <artheater/harness/report.hpp>
#include <artheater/harness/scenario.hpp>
#include <artheater/harness/tracing.hpp>
#include <artheater/harness/walkers.hpp>

#include <doctest.h>

#include <algorithm>
#include <filesystem>

using namespace artheater;
using namespace artheater::harness;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("artheater_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

json theater_json(const std::string& walker_kind, std::uint64_t seed = 7) {
  return {{"version", 1},
          {"name", "t"},
          {"kind", "Theater"},
          {"seed", seed},
          {"dt", 0.02},
          {"duration", 900},
          {"walker", {{"kind", walker_kind}, {"start", {1.0, 2.0}}}}};
}

json distortion_json(const std::string& walker_kind) {
  return {{"version", 1},
          {"name", "d"},
          {"kind", "Distortion"},
          {"seed", 3},
          {"dt", 0.02},
          {"walker", {{"kind", walker_kind}, {"speed", 0.6}}},
          {"distortion", {{"treatment", {{"kind", "shift"}}}, {"participants", 2}}}};
}

json rollout_json() {
  return {{"version", 1},
          {"name", "r"},
          {"kind", "Rollout"},
          {"seed", 5},
          {"dt", 0.2},
          {"rollout", {{"episodes", 4}, {"mode", "Random"}}}};
}

int count(const std::vector<stage::StageEvent>& ev, stage::EventKind k) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [&](const auto& e) { return e.kind == k; }));
}

}  // namespace

TEST_CASE("config parsing is strict") {
  CHECK_NOTHROW(parse_config(theater_json("Waypoint"), "."));

  auto j = theater_json("Waypoint");
  j["colour"] = "red";
  CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  j = theater_json("Waypoint");
  j["walker"]["sped"] = 1.0;
  CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  for (const char* key : {"seed", "dt", "version", "kind", "name"}) {
    j = theater_json("Waypoint");
    j.erase(key);
    CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  }
  j = theater_json("Waypoint");
  j["version"] = 2;
  CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  j = theater_json("Waypoint");
  j["seed"] = -1;
  CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  for (double speed : {0.0, 3.5, -1.0}) {
    j = theater_json("Waypoint");
    j["walker"]["speed"] = speed;
    CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  }
  j = theater_json("Waypoint");
  j["walker"]["speed"] = 3.0;
  CHECK_NOTHROW(parse_config(j, "."));
  j = theater_json("Waypoint");
  j["distortion"] = {{"treatment", {{"kind", "shift"}}}};
  CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  j = distortion_json("Guided");
  CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  j = distortion_json("Wander");
  j["distortion"]["treatment"]["kind"] = "twist";
  CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  j = rollout_json();
  j["rollout"]["mode"] = "Greedy";
  CHECK_THROWS_AS(parse_config(j, "."), ConfigError);
  j = theater_json("Waypoint");
  j["scene"] = "does/not/exist.json";
  CHECK_THROWS_AS(parse_config(j, "."), SceneLoadError);
  CHECK_NOTHROW(parse_config(j, ".", false));
}

TEST_CASE("normalized config round-trips") {
  for (const auto& j : {theater_json("Guided"), distortion_json("Wander"), rollout_json()}) {
    const auto c = parse_config(j, ".");
    const auto n = config_to_json(c);
    CHECK(config_to_json(parse_config(n, ".")) == n);
  }
}

TEST_CASE("guided walker kinematics") {
  Pose p;
  p.heading = 0.3;
  const Pose q = guided_walker_step(p, Vec2(std::cos(0.3), std::sin(0.3)), 1.4, kPi, 0.02);
  CHECK((q.position - p.position).norm() == doctest::Approx(1.4 * 0.02));
  CHECK(q.heading == doctest::Approx(0.3));
  CHECK(guided_walker_step(p, Vec2(1, 0), 1.4, kPi, 0.02, true).position == p.position);
  CHECK(guided_walker_step(p, std::nullopt, 1.4, kPi, 0.02).position == p.position);
  // Turning is rate-limited.
  const Pose back = guided_walker_step(Pose{}, Vec2(-1, 0.001), 1.0, kPi / 2, 0.1);
  CHECK(back.heading == doctest::Approx(kPi / 20));

  // A target 10 m away, initially behind the walker's shoulder.
  const Vec2 target(10.0, 0.0);
  Pose w;
  w.heading = kPi / 2;
  double t = 0.0;
  const double dt = 0.02;
  while ((target - w.position).norm() > 1.4 * dt && t < 20.0) {
    w = guided_walker_step(w, target - w.position, 1.4, deg2rad(180), dt);
    t += dt;
  }
  CHECK(t >= 10.0 / 1.4 - 2 * dt);
  CHECK(t <= 7.2 + 0.3);
}

TEST_CASE("waypoint theater completes the corridor cue sheet") {
  const auto run = run_theater(parse_config(theater_json("Waypoint"), "."));
  CHECK(count(run.events, stage::EventKind::ClipStarted) == 9);
  CHECK(count(run.events, stage::EventKind::ClipEnded) == 9);
  CHECK(count(run.events, stage::EventKind::SpiralSpawned) == 3);
  CHECK(count(run.events, stage::EventKind::PlayEnded) == 1);
  CHECK(run.events.back().kind == stage::EventKind::PlayEnded);
  const auto timing = stage::stage_timing_report(run.events);
  REQUIRE(timing.durations.size() == 3);
  for (double d : timing.durations) CHECK(std::abs(d - 100.0) <= 20.0);
  REQUIRE(run.all_zones_time);
  CHECK(run.trace.front().t == 0.0);
  CHECK(run.trace.front().stage == "Future");
  CHECK(run.trace.front().guidance == "particle");
}

TEST_CASE("guided walkers stop in the playing zone and follow the aids") {
  auto j = theater_json("Guided");
  const auto run = run_theater(parse_config(j, "."));
  CHECK(count(run.events, stage::EventKind::PlayEnded) == 1);
  std::vector<std::string> aids;
  for (const auto& r : run.trace) {
    if (aids.empty() || aids.back() != r.guidance) aids.push_back(r.guidance);
  }
  CHECK(aids == std::vector<std::string>{"particle", "arrow", "compass"});

  for (const char* aid : {"radar", "compass", "arrow", "particle"}) {
    j["walker"]["aid"] = aid;
    const auto r = run_theater(parse_config(j, "."));
    CHECK(count(r.events, stage::EventKind::PlayEnded) == 1);
  }
}

TEST_CASE("guided beats wander to all zones") {
  std::vector<double> guided, wander;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto g = run_theater(parse_config(theater_json("Guided", seed), "."));
    const auto w = run_theater(parse_config(theater_json("Wander", seed), "."));
    guided.push_back(g.all_zones_time.value_or(1e9));
    wander.push_back(w.all_zones_time.value_or(1e9));
  }
  std::sort(guided.begin(), guided.end());
  std::sort(wander.begin(), wander.end());
  CHECK(guided[4] < wander[4]);
}

TEST_CASE("scene and cue sheet loading") {
  TempDir tmp("scene");
  geometry::SceneDocument doc;
  for (auto [a, b] : {std::pair<Vec2, Vec2>{{0, 0}, {10, 0}}, {{10, 0}, {10, 4}}, {{10, 4}, {0, 4}}, {{0, 4}, {0, 0}}}) {
    doc.graph = geometry::trace_segment(std::move(doc.graph), a, b, geometry::TraceMode::Wall);
  }
  write_file(tmp.path / "short.json", geometry::scene_to_json(doc, geometry::build_scene(doc)).dump());
  write_file(tmp.path / "broken.json", "{\"version\": 1, \"joints\": [[0, 0]]");
  auto j = theater_json("Waypoint");
  j["scene"] = "short.json";
  CHECK_THROWS_AS(run_theater(parse_config(j, tmp.path)), SceneLoadError);
  j["scene"] = "broken.json";
  CHECK_THROWS_AS(run_theater(parse_config(j, tmp.path)), SceneLoadError);

  stage::CueSheet sheet;
  sheet.stages.push_back({});
  sheet.stages[0].theme = "Short";
  sheet.stages[0].spiral = {9, 2};
  for (int i = 0; i < 3; ++i) {
    stage::ContentZone z;
    z.id = "s" + std::to_string(i);
    z.center = {2.0 + 2.5 * i, 2.0};
    z.clip = {"c", 3.0};
    sheet.stages[0].zones.push_back(z);
  }
  write_file(tmp.path / "sheet.json", stage::cue_sheet_to_json(sheet).dump());
  j["scene"] = "short.json";
  j["cue_sheet"] = "sheet.json";
  j["walker"]["start"] = {0.5, 2.0};
  const auto run = run_theater(parse_config(j, tmp.path));
  CHECK(count(run.events, stage::EventKind::ClipStarted) == 3);
  CHECK(count(run.events, stage::EventKind::PlayEnded) == 1);

  j["walker"]["start"] = {20.0, 2.0};
  CHECK_THROWS_AS(run_theater(parse_config(j, tmp.path)), ConfigError);
}

TEST_CASE("stationary distortion walker has zero metrics") {
  auto j = distortion_json("Waypoint");
  j["walker"]["start"] = {0.5, -0.25};
  const auto cfg = parse_config(j, ".");
  const auto run = run_distortion(cfg);
  REQUIRE(run.traces.size() == 2);
  const auto m = covered_metrics(to_locomotion(run.traces[0]), cfg.distortion.room, cfg.distortion.timeline);
  CHECK(m.segments.size() == 4);
  for (const auto& s : m.segments) {
    CHECK(s.axis_displacement == 0.0);
    CHECK(s.center_change == 0.0);
  }
  CHECK(m.total_walking_distance == 0.0);
}

TEST_CASE("wandering stays inside the room") {
  const auto cfg = parse_config(distortion_json("Wander"), ".");
  const auto run = run_distortion(cfg);
  const Box2 floor = cfg.distortion.room.floor();
  for (const auto& trace : run.traces) {
    for (const auto& r : trace) CHECK(floor.contains({r.x, r.y}));
  }
  CHECK(run.traces[0] != run.traces[1]);
}

TEST_CASE("trace CSV round-trips exactly") {
  Rng rng = make_rng(4);
  std::vector<TraceRecord> records;
  for (int i = 0; i < 500; ++i) {
    TraceRecord r{i * 0.02, uniform(rng, -30, 30), uniform(rng, -30, 30), uniform(rng, -kPi, kPi), "Future",
                  i % 3 ? "arrow" : "none", std::nullopt};
    if (i % 4) r.nearest_target_distance = uniform(rng, 0, 1e3) * 1e-7;
    records.push_back(r);
  }
  const auto text = trace_csv(records);
  CHECK(text.rfind("# artheater-trace v1\nt,x,y,heading,stage,guidance,nearest_target_distance\n", 0) == 0);
  CHECK(trace_from_csv(text) == records);
  CHECK(trace_from_csv(trace_csv({})).empty());
  CHECK_THROWS_AS(trace_from_csv("t,x,y\n1,2,3\n"), RecordFormatError);
  CHECK_THROWS_AS(trace_from_csv(trace_csv(records) + "1,2\n"), RecordFormatError);
  records[0].stage = "a,b";
  CHECK_THROWS_AS(trace_csv(records), RecordFormatError);
}

TEST_CASE("sha256 and bundle verification") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

  TempDir tmp("bundle");
  const auto cfg = parse_config(rollout_json(), ".");
  const auto dir = run_scenario(cfg, tmp.path, "one");
  CHECK(dir == tmp.path / "r" / "one");
  CHECK(verify_bundle(dir).empty());
  const auto manifest = read_manifest(dir);
  CHECK(manifest["files"].size() == 9);
  CHECK(manifest["config"] == config_to_json(cfg));

  write_file(dir / "episodes/e001.csv", "tampered");
  CHECK(verify_bundle(dir).size() == 1);
  CHECK_THROWS_AS(build_report(dir), IncompleteBundle);
  fs::remove(dir / "episodes/e001.csv");
  CHECK(verify_bundle(dir).size() == 1);
  fs::remove(dir / "manifest.json");
  CHECK_THROWS_AS(verify_bundle(dir), IncompleteBundle);
  CHECK_THROWS_AS(emit_report(dir), IncompleteBundle);
}

TEST_CASE("identical configs give identical bundles") {
  TempDir tmp("determinism");
  auto theater = theater_json("Guided");
  theater["duration"] = 60;
  for (const auto& j : {theater, distortion_json("Wander"), rollout_json()}) {
    const auto cfg = parse_config(j, ".");
    const auto a = run_scenario(cfg, tmp.path, "a");
    const auto b = run_scenario(cfg, tmp.path, "b");
    emit_report(a);
    emit_report(b);
    const auto files = read_manifest(a)["files"];
    CHECK(files == read_manifest(b)["files"]);
    for (const auto& f : files) {
      const std::string p = f["path"];
      CHECK(read_file(a / p) == read_file(b / p));
    }
  }
}

TEST_CASE("distortion report matches recomputation from the raw traces") {
  TempDir tmp("report_distortion");
  const auto cfg = parse_config(distortion_json("Wander"), ".");
  const auto dir = run_scenario(cfg, tmp.path, "x");
  const auto report = emit_report(dir);
  CHECK(verify_bundle(dir).empty());
  const auto& room = cfg.distortion.room;
  REQUIRE(report["participants"].size() == 2);
  for (const auto& p : report["participants"]) {
    const auto records = trace_from_csv(read_file(dir / ("traces/" + p["id"].get<std::string>() + ".csv")));
    // Independent: net displacement between the window ends, linear interpolation by hand.
    auto at = [&](double t) {
      for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].t >= t) {
          const double u = (t - records[i - 1].t) / (records[i].t - records[i - 1].t);
          return Vec2(records[i - 1].x + u * (records[i].x - records[i - 1].x),
                      records[i - 1].y + u * (records[i].y - records[i - 1].y));
        }
      }
      return Vec2(records.back().x, records.back().y);
    };
    REQUIRE(p["segments"].size() == 4);
    for (const auto& s : p["segments"]) {
      const double t0 = s["t0"], t1 = s["t1"];
      CHECK(s["axis_movement"].get<double>() == doctest::Approx((at(t1) - at(t0)).dot(room.short_axis())).epsilon(1e-9));
      CHECK(s["center_distance_change"].get<double>() ==
            doctest::Approx(at(t1).norm() - at(t0).norm()).epsilon(1e-9));
    }
    double walked = 0.0;
    for (std::size_t i = 1; i < records.size(); ++i) {
      walked += std::hypot(records[i].x - records[i - 1].x, records[i].y - records[i - 1].y);
    }
    CHECK(p["total_walking_distance"].get<double>() == doctest::Approx(walked));
  }
  // Four Apply/Return windows, each with a map, plus the combined one.
  CHECK(report["density_maps"].size() == 5);
  CHECK(fs::exists(dir / "density/window_00.pgm"));
  CHECK(read_file(dir / "plots/axis_movement.svg").find("<polyline") != std::string::npos);
  const std::string svg = read_file(dir / "plots/axis_movement.svg");
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 4);
}

TEST_CASE("rollout report rewards equal the trace oracle") {
  TempDir tmp("report_rollout");
  const auto dir = run_scenario(parse_config(rollout_json(), "."), tmp.path, "x");
  const auto report = emit_report(dir);
  double total = 0.0;
  for (const auto& e : report["episodes"]) {
    CHECK(std::abs(e["reward"].get<double>() - e["oracle_reward"].get<double>()) <= 1e-6);
    total += e["reward"].get<double>();
  }
  CHECK(report["reward_total"].get<double>() == doctest::Approx(total));
}

TEST_CASE("empty traces give a zeroed report") {
  TempDir tmp("report_empty");
  const auto cfg = parse_config(distortion_json("Wander"), ".");
  const auto dir = tmp.path / "empty";
  write_bundle(dir, cfg, {{"traces/p00.csv", trace_csv({})}});
  const auto report = emit_report(dir);
  const auto& p = report["participants"][0];
  CHECK(p["total_walking_distance"] == 0.0);
  for (const auto& s : p["segments"]) {
    CHECK(s["axis_movement"] == 0.0);
    CHECK(s["center_distance_change"] == 0.0);
  }
  CHECK(report["density_maps"].back()["total"] == 0);
}

TEST_CASE("bubble scenario notes parse back") {
  json j = {{"version", 1}, {"name", "b"}, {"kind", "Bubbles"}, {"seed", 2}, {"dt", 0.02}, {"duration", 30},
            {"walker", {{"kind", "Wander"}, {"speed", 0.5}}}};
  const auto cfg = parse_config(j, ".");
  const auto files = simulate(cfg);
  const auto run = run_bubbles(cfg);
  for (const auto& f : files) {
    if (f.path == "notes/p00.jsonl") CHECK(bubbles::notes_from_jsonl(f.content) == run.notes[0]);
  }
  const Box2 fence = cfg.bubbles.space.fence();
  for (const auto& r : run.traces[0]) CHECK(fence.contains({r.x, r.y}));
}

TEST_CASE("trace jobs produce a scene and an OBJ") {
  const json j = {{"version", 1},
                  {"name", "room"},
                  {"wall_height", 3.0},
                  {"segments",
                   {{{"a", {0, 0}}, {"b", {6, 0}}},
                    {{"a", {6, 0}}, {"b", {6, 5}}},
                    {{"a", {6, 5}}, {"b", {0, 5}}},
                    {{"a", {0, 5}}, {"b", {0, 0}}},
                    {{"a", {2, 2}}, {"b", {3, 2}}, {"mode", "Object"}},
                    {{"a", {3, 2}}, {"b", {3, 3}}, {"mode", "Object"}},
                    {{"a", {3, 3}}, {"b", {2, 3}}, {"mode", "Object"}},
                    {{"a", {2, 3}}, {"b", {2, 2}}, {"mode", "Object"}}}}};
  const auto job = parse_trace_job(j, ".");
  const auto files = run_trace_job(job);
  REQUIRE(files.size() == 3);
  const auto doc = geometry::scene_document_from_json(json::parse(files[0].content));
  CHECK(doc.graph.segments.size() == 8);
  const auto mesh = geometry::parse_obj(files[1].content);
  CHECK(!mesh.vertices.empty());
  CHECK(parse_trace_job(trace_job_to_json(job), ".").segments.size() == 8);

  auto bad = j;
  bad["segments"][4]["mode"] = "Door";
  CHECK_THROWS_AS(parse_trace_job(bad, "."), ConfigError);
  bad = j;
  bad["segments"].erase(7);
  CHECK_THROWS_AS(run_trace_job(parse_trace_job(bad, ".")), SceneLoadError);
}
