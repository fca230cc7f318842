#include <artheater/harness/scenario.hpp>

#include <artheater/agents/imitation.hpp>
#include <artheater/geometry/scene_io.hpp>
#include <artheater/guidance/guidance.hpp>
#include <artheater/harness/walkers.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <map>

namespace artheater::harness {

namespace {

using nlohmann::json;

std::int64_t step_count(const ScenarioConfig& c) {
  return static_cast<std::int64_t>(std::floor(c.duration / c.dt + 1e-9));
}

Vec2 default_start(const geometry::OcclusionScene& scene) {
  return {scene.bounds.min.x() + 1.0, scene.bounds.center().y()};
}

Pose start_pose(const WalkerSpec& spec, const geometry::OcclusionScene& scene, const Vec2& fallback) {
  Pose p;
  p.position = spec.start.value_or(fallback);
  p.heading = spec.heading;
  p.head_height = spec.head_height;
  if (!geometry::point_in_walkable(scene, p.position)) {
    throw ConfigError(fmt::format("walker start ({}, {}) is outside the walkable area", p.position.x(), p.position.y()));
  }
  return p;
}

AidKind shown_aid(const WalkerSpec& spec, stage::GuidanceMode mode) {
  if (spec.kind == WalkerKind::Guided && spec.aid != AidKind::Stage) return spec.aid;
  switch (mode) {
    case stage::GuidanceMode::Particle: return AidKind::Particle;
    case stage::GuidanceMode::Arrow: return AidKind::Arrow;
    case stage::GuidanceMode::None: break;
  }
  return spec.kind == WalkerKind::Guided ? AidKind::Compass : AidKind::Stage;
}

std::string aid_label(AidKind aid) { return aid == AidKind::Stage ? "none" : to_string(aid); }

std::optional<Vec2> particle_bearing(const guidance::ParticleGuideState& s) {
  Vec2 sum = Vec2::Zero();
  for (const auto& p : s.particles) {
    const Vec2 v = p.velocity.head<2>();
    if (v.norm() > 0.0) sum += v.normalized();
  }
  if (sum.norm() == 0.0) return std::nullopt;
  return sum;
}

std::optional<Vec2> radar_bearing(const Pose& pose, const guidance::RadarProjection& r) {
  if (r.blips.empty()) return std::nullopt;
  const Vec2 fwd = pose.forward();
  const Vec2 right(fwd.y(), -fwd.x());
  const Vec2 b = r.blips.front().position;
  return b.x() * right + b.y() * fwd;
}

std::optional<Vec2> compass_bearing(const Pose& pose, const guidance::CompassProjection& c) {
  const auto& marks = c.front.empty() ? c.behind : c.front;
  if (marks.empty()) return std::nullopt;
  const double h = pose.heading + deg2rad(marks.front().bearing_offset_deg);
  return Vec2(std::cos(h), std::sin(h));
}

bool inside_playing_zone(const stage::StageState& s, const stage::CueSheet& sheet, const Vec2& p) {
  if (s.ended) return false;
  const auto& st = sheet.stages[static_cast<std::size_t>(s.stage)];
  for (std::size_t i = 0; i < st.zones.size(); ++i) {
    if (s.zones[i] == stage::ZoneStatus::Playing && st.zones[i].contains(p)) return true;
  }
  return false;
}

bool any_playing(const stage::StageState& s) {
  return std::any_of(s.zones.begin(), s.zones.end(), [](auto z) { return z == stage::ZoneStatus::Playing; });
}

}  // namespace

geometry::OcclusionScene rectangle_scene(const Box2& box, double wall_height) {
  geometry::TraceGraph g;
  const Vec2 c[4] = {box.min, {box.max.x(), box.min.y()}, box.max, {box.min.x(), box.max.y()}};
  for (int i = 0; i < 4; ++i) g = geometry::trace_segment(std::move(g), c[i], c[(i + 1) % 4], geometry::TraceMode::Wall);
  return geometry::build_scene(g, wall_height, box);
}

geometry::OcclusionScene load_scene(const ScenarioConfig& config) {
  if (config.scene.empty()) return rectangle_scene({{0.0, 0.0}, {30.0, 4.0}});
  const auto path = config.resolve(config.scene);
  try {
    return geometry::build_scene(geometry::scene_document_from_json(json::parse(read_file(path))));
  } catch (const std::exception& e) {
    throw SceneLoadError(path.string() + ": " + e.what());
  }
}

stage::CueSheet load_cue_sheet(const ScenarioConfig& config) {
  if (config.cue_sheet.empty()) return stage::corridor_sheet();
  const auto path = config.resolve(config.cue_sheet);
  try {
    return stage::cue_sheet_from_json(json::parse(read_file(path)));
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<Waypoint> cue_sheet_tour(const stage::CueSheet& sheet) {
  std::vector<Waypoint> tour;
  for (const auto& st : sheet.stages) {
    for (const auto& z : st.zones) tour.push_back({z.center, z.clip.duration});
    tour.push_back({st.spiral, 0.0});
  }
  return tour;
}

TheaterRun run_theater(const ScenarioConfig& config) {
  const auto scene = load_scene(config);
  const auto sheet = load_cue_sheet(config);
  std::size_t total_zones = 0;
  for (const auto& st : sheet.stages) {
    for (const auto& z : st.zones) {
      if (!geometry::point_in_walkable(scene, z.center)) throw SceneLoadError("zone " + z.id + " is not walkable");
    }
    if (!geometry::point_in_walkable(scene, st.spiral)) throw SceneLoadError("spiral of " + st.theme + " is not walkable");
    total_zones += st.zones.size();
  }

  WalkerSpec spec = config.walker;
  if (spec.kind == WalkerKind::Waypoint && spec.points.empty()) spec.points = cue_sheet_tour(sheet);
  Walker walker(spec, start_pose(spec, scene, default_start(scene)), derive_seed(config.seed, 1));
  const double radar_range = scene.bounds.extent().norm();

  TheaterRun run;
  run.guidance_csv = guidance::guidance_csv_header();
  stage::StageState state = stage::initial_state(sheet);
  std::optional<guidance::ParticleGuideState> particles;
  guidance::ArrowGuideState arrow;
  std::size_t started = 0;

  auto record = [&](double t) {
    const Pose& p = walker.pose();
    const auto& st = sheet.stages[static_cast<std::size_t>(state.stage)];
    const auto target = stage::guidance_target(state, sheet, p.position);
    run.trace.push_back({t, p.position.x(), p.position.y(), p.heading, st.theme, aid_label(shown_aid(spec, st.guidance)),
                         target ? std::optional<double>((*target - p.position).norm()) : std::nullopt});
  };
  record(0.0);

  const std::int64_t steps = step_count(config);
  for (std::int64_t k = 1; k <= steps && !state.ended; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    const Pose pose = walker.pose();
    const auto& st = sheet.stages[static_cast<std::size_t>(state.stage)];
    const auto target = stage::guidance_target(state, sheet, pose.position);
    const AidKind aid = shown_aid(spec, st.guidance);
    std::optional<Vec2> bearing;
    if (target) {
      const Vec3 goal(target->x(), target->y(), pose.head_height);
      switch (aid) {
        case AidKind::Particle:
          particles = particles ? guidance::particle_step(std::move(*particles), pose, goal, config.dt)
                                : guidance::make_particle_guide(pose, goal, {}, derive_seed(config.seed, 2));
          bearing = particle_bearing(*particles);
          run.guidance_csv += guidance::guidance_csv_row(t, *particles);
          break;
        case AidKind::Arrow:
          arrow = guidance::arrow_pose(arrow, pose, goal, any_playing(state), config.dt);
          bearing = arrow.pointing.head<2>();
          run.guidance_csv += guidance::guidance_csv_row(t, arrow);
          break;
        case AidKind::Radar: {
          const auto r = guidance::radar_project(pose, std::span<const Vec3>(&goal, 1), radar_range);
          bearing = radar_bearing(pose, r);
          run.guidance_csv += guidance::guidance_csv_row(t, r);
          break;
        }
        case AidKind::Compass: {
          const auto c = guidance::compass_project(pose, std::span<const Vec3>(&goal, 1));
          bearing = compass_bearing(pose, c);
          run.guidance_csv += guidance::guidance_csv_row(t, c);
          break;
        }
        case AidKind::Stage: break;
      }
    }
    walker.step(scene, bearing, inside_playing_zone(state, sheet, pose.position), config.dt);
    auto [next, events] = stage::step(std::move(state), sheet, walker.pose(), config.dt);
    state = std::move(next);
    for (const auto& e : events) {
      if (e.kind == stage::EventKind::ClipStarted && ++started == total_zones) run.all_zones_time = e.time;
      run.events.push_back(e);
    }
    record(t);
  }
  return run;
}

DistortionRun run_distortion(const ScenarioConfig& config) {
  const auto& d = config.distortion;
  const auto scene = rectangle_scene(d.room.floor(), d.room.height);
  const auto lattice = distortion::room_geometry(d.room, 6);
  auto virtual_bounds = [&](double extent) {
    Box3 b{Vec3::Constant(std::numeric_limits<double>::infinity()), Vec3::Constant(-std::numeric_limits<double>::infinity())};
    for (const auto& v : lattice.vertices) {
      const Vec3 p = distortion::distort_point(d.room, d.treatment, extent, v);
      b.min = b.min.cwiseMin(p);
      b.max = b.max.cwiseMax(p);
    }
    return b;
  };

  DistortionRun run;
  const std::int64_t steps = step_count(config);
  auto field = distortion::make_particle_field(virtual_bounds(0.0), d.particles, derive_seed(config.seed, 3));
  run.timeline_csv = "t,segment,phase,progress,extent,particles,min_x,min_y,min_z,max_x,max_y,max_z\n";
  for (std::int64_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    const auto s = distortion::timeline_step(d.timeline, t);
    const Box3 b = virtual_bounds(s.extent);
    if (k > 0) field = distortion::particle_field_step(std::move(field), b, config.dt);
    run.timeline_csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", t, s.segment, distortion::to_string(s.phase),
                                    s.progress, s.extent, field.particles.size(), b.min.x(), b.min.y(), b.min.z(),
                                    b.max.x(), b.max.y(), b.max.z());
  }

  for (int p = 0; p < d.participants; ++p) {
    Walker walker(config.walker, start_pose(config.walker, scene, d.room.center()),
                  derive_seed(config.seed, 100 + static_cast<std::uint64_t>(p)));
    std::vector<TraceRecord> trace;
    for (std::int64_t k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * config.dt;
      if (k > 0) walker.step(scene, std::nullopt, false, config.dt);
      const Pose& pose = walker.pose();
      const auto s = distortion::timeline_step(d.timeline, t);
      trace.push_back({t, pose.position.x(), pose.position.y(), pose.heading, distortion::to_string(s.phase), "none",
                       (pose.position - d.room.center()).norm()});
    }
    run.traces.push_back(std::move(trace));
  }
  return run;
}

BubbleRun run_bubbles(const ScenarioConfig& config) {
  const auto& b = config.bubbles;
  const auto scene = rectangle_scene(b.space.fence());
  auto orchestra = bubbles::make_orchestra(b.space, b.bubbles, derive_seed(config.seed, 4));
  const std::int64_t steps = step_count(config);

  std::vector<Walker> walkers;
  for (int p = 0; p < b.participants; ++p) {
    walkers.emplace_back(config.walker, start_pose(config.walker, scene, b.space.center),
                         derive_seed(config.seed, 100 + static_cast<std::uint64_t>(p)));
  }
  BubbleRun run;
  run.traces.resize(walkers.size());
  std::vector<std::vector<Vec3>> heads(walkers.size());
  bubbles::BubbleTrajectory trajectory;
  run.bubbles_csv = "t,bubble,chord,x,y,z\n";

  for (std::int64_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    if (k > 0) orchestra = bubbles::bubble_step(std::move(orchestra), b.space, config.dt);
    trajectory.push_back(orchestra.bubbles);
    for (const auto& bub : orchestra.bubbles) {
      run.bubbles_csv += fmt::format("{},{},{},{},{},{}\n", t, bub.id, bub.chord, bub.center.x(), bub.center.y(),
                                     bub.center.z());
    }
    for (std::size_t p = 0; p < walkers.size(); ++p) {
      if (k > 0) walkers[p].step(scene, std::nullopt, false, config.dt);
      const Pose& pose = walkers[p].pose();
      heads[p].push_back(pose.head());
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& bub : orchestra.bubbles) nearest = std::min(nearest, (bub.center - pose.head()).norm());
      run.traces[p].push_back({t, pose.position.x(), pose.position.y(), pose.heading, "bubbles", "none", nearest});
    }
  }
  for (const auto& h : heads) run.notes.push_back(bubbles::note_events(h, trajectory, config.dt));
  return run;
}

std::vector<agents::EpisodeResult> run_rollout(const ScenarioConfig& config) {
  const auto env = config.env_config();
  const auto& r = config.rollout;
  std::optional<agents::Policy> policy;
  if (!config.walker.checkpoint.empty()) {
    try {
      policy = agents::load_checkpoint(config.resolve(config.walker.checkpoint));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  const agents::ActionMode mode = policy ? r.mode : agents::ActionMode::Random;
  if (r.agents == 1) return agents::rollout(policy ? &*policy : nullptr, env, r.episodes, config.seed, mode);
  const agents::Policy shared = policy ? *policy : agents::make_policy(config.seed);
  std::vector<agents::EpisodeResult> out;
  for (int e = 0; e < r.episodes; ++e) {
    auto group = agents::rollout_agents(shared, env, r.agents, derive_seed(config.seed, static_cast<std::uint64_t>(e)), mode);
    std::move(group.begin(), group.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<TraceRecord> episode_records(const agents::EpisodeResult& episode, const agents::EnvConfig& env) {
  const auto sheet = env.layout.cue_sheet();
  const auto& zones = sheet.stages.front().zones;
  std::map<std::string, double> started;
  for (const auto& e : episode.events) {
    if (e.kind == stage::EventKind::ClipStarted) started.emplace(e.subject, e.time);
  }
  std::vector<TraceRecord> out;
  for (const auto& s : episode.trace.samples) {
    std::optional<double> nearest;
    for (const auto& z : zones) {
      const auto it = started.find(z.id);
      if (it != started.end() && it->second <= s.t) continue;
      const double d = (z.center - s.position).norm();
      if (!nearest || d < *nearest) nearest = d;
    }
    out.push_back({s.t, s.position.x(), s.position.y(), s.heading, sheet.stages.front().theme, "none", nearest});
  }
  return out;
}

std::vector<TrainedCandidate> run_train(const ScenarioConfig& config, const Progress& progress) {
  const auto& tp = config.train;
  const auto env = config.env_config();
  std::vector<TrainedCandidate> out;

  agents::DemonstrationSet demos;
  if (tp.method == TrainMethod::Bc) {
    const auto traces = agents::expert_traces(env, tp.expert_episodes, derive_seed(config.seed, 5), tp.expert);
    demos = agents::demos_from_traces(traces, env);
    if (progress) progress(fmt::format("{} demonstration steps from {} expert episodes", demos.size(), traces.size()));
  }

  for (int i = 0; i < tp.candidates; ++i) {
    TrainedCandidate c;
    c.seed = derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(i));
    if (tp.method == TrainMethod::Ppo) {
      agents::TrainingRun run{c.seed, tp.steps, tp.ppo};
      auto result = agents::ppo_train([env] { return agents::CorridorEnv(env); }, agents::make_policy(c.seed, tp.ppo),
                                      run, [&](const agents::IterationStats& s) {
                                        if (progress && (s.iteration % 10 == 0)) {
                                          progress(fmt::format("candidate {} step {} reward {:.2f} zones {:.2f}", i,
                                                               s.steps, s.mean_reward, s.mean_zones));
                                        }
                                      });
      c.policy = std::move(result.policy);
      c.stats = std::move(result.stats);
    } else {
      agents::BcConfig bc = tp.bc;
      bc.seed = c.seed;
      auto result = agents::bc_train(demos, agents::make_policy(c.seed, tp.ppo), bc);
      c.policy = std::move(result.policy);
      c.bc_loss = std::move(result.epoch_loss);
    }
    const auto eval = agents::rollout(&c.policy, env, tp.eval_episodes, derive_seed(c.seed, 9), agents::ActionMode::Greedy);
    c.evaluation = agents::summarize(eval);
    if (progress) {
      progress(fmt::format("candidate {} evaluation: mean zones {:.2f}, mean reward {:.2f}", i, c.evaluation.mean_zones,
                           c.evaluation.mean_reward));
    }
    out.push_back(std::move(c));
  }
  std::vector<double> rewards;
  for (const auto& c : out) rewards.push_back(c.evaluation.mean_reward);
  for (auto k : agents::select_models(rewards, tp.keep_fraction)) out[k].kept = true;
  return out;
}

distortion::TraceMetrics covered_metrics(const LocomotionTrace& trace, const distortion::RoomModel& room,
                                         const distortion::TreatmentTimeline& timeline) {
  distortion::TraceMetrics m;
  const bool measurable = trace.samples.size() >= 2;
  for (const auto& w : distortion::stimulus_windows(timeline)) {
    distortion::SegmentMetrics s{w, 0.0, 0.0};
    if (measurable && w.t0 >= trace.start() - 1e-9 && w.t1 <= trace.end() + 1e-9) {
      s.axis_displacement = distortion::axis_movement(trace, room, w.t0, w.t1);
      s.center_change = distortion::center_distance_change(trace, room, w.t0, w.t1);
    }
    m.segments.push_back(s);
  }
  if (measurable) m.total_walking_distance = distortion::total_walking_distance(trace);
  return m;
}

std::vector<Artifact> simulate(const ScenarioConfig& config, const Progress& progress) {
  std::vector<Artifact> files;
  switch (config.kind) {
    case ScenarioKind::Theater: {
      const auto run = run_theater(config);
      const auto sheet = load_cue_sheet(config);
      std::vector<stage::TimedPosition> positions;
      for (const auto& r : run.trace) positions.push_back({r.t, {r.x, r.y}});
      const auto timing = stage::stage_timing_report(run.events, positions);
      std::map<std::string, int> counts;
      for (const auto& e : run.events) ++counts[stage::to_string(e.kind)];
      json summary = {{"event_counts", counts},
                      {"stage_durations", timing.durations},
                      {"stage_distances", timing.distances},
                      {"visit_order", timing.visit_order},
                      {"total_distance", timing.total_distance},
                      {"all_zones_time", run.all_zones_time ? json(*run.all_zones_time) : json(nullptr)},
                      {"ended", counts.count("PlayEnded") > 0}};
      files.push_back({"trace.csv", trace_csv(run.trace)});
      files.push_back({"events.jsonl", stage::events_to_jsonl(run.events)});
      files.push_back({"guidance.csv", run.guidance_csv});
      files.push_back({"cue_sheet.json", stage::cue_sheet_to_json(sheet).dump(2) + "\n"});
      files.push_back({"summary.json", summary.dump(2) + "\n"});
      break;
    }
    case ScenarioKind::Distortion: {
      const auto run = run_distortion(config);
      const auto& d = config.distortion;
      std::string metrics = distortion::metrics_csv_header();
      json participants = json::array();
      for (std::size_t p = 0; p < run.traces.size(); ++p) {
        const std::string id = fmt::format("p{:02}", p);
        const auto m = covered_metrics(to_locomotion(run.traces[p]), d.room, d.timeline);
        metrics += distortion::metrics_csv_rows(id, m);
        files.push_back({"traces/" + id + ".csv", trace_csv(run.traces[p])});
        participants.push_back({{"id", id}, {"total_walking_distance", m.total_walking_distance}});
      }
      files.push_back({"timeline.csv", run.timeline_csv});
      files.push_back({"metrics.csv", metrics});
      files.push_back({"summary.json", json{{"treatment", distortion::to_string(d.treatment.kind)},
                                            {"participants", participants}}
                                               .dump(2) +
                                           "\n"});
      break;
    }
    case ScenarioKind::Bubbles: {
      const auto run = run_bubbles(config);
      json participants = json::array();
      for (std::size_t p = 0; p < run.traces.size(); ++p) {
        const std::string id = fmt::format("p{:02}", p);
        files.push_back({"traces/" + id + ".csv", trace_csv(run.traces[p])});
        files.push_back({"notes/" + id + ".jsonl", bubbles::notes_to_jsonl(run.notes[p])});
        files.push_back({"notes/" + id + ".csv", bubbles::notes_csv(run.notes[p])});
        const auto ons = std::count_if(run.notes[p].begin(), run.notes[p].end(),
                                       [](const auto& n) { return n.kind == bubbles::NoteKind::On; });
        participants.push_back({{"id", id}, {"note_ons", ons}});
      }
      files.push_back({"bubbles.csv", run.bubbles_csv});
      files.push_back({"summary.json", json{{"participants", participants}}.dump(2) + "\n"});
      break;
    }
    case ScenarioKind::Rollout: {
      const auto episodes = run_rollout(config);
      const auto env = config.env_config();
      json list = json::array();
      for (std::size_t k = 0; k < episodes.size(); ++k) {
        const auto& e = episodes[k];
        const std::string id = fmt::format("e{:03}", k);
        files.push_back({"episodes/" + id + ".csv", trace_csv(episode_records(e, env))});
        files.push_back({"episodes/" + id + ".events.jsonl", stage::events_to_jsonl(e.events)});
        list.push_back({{"id", id},
                        {"seed", e.seed},
                        {"reward", e.reward},
                        {"zones_entered", e.zones_entered},
                        {"visit_order", e.visit_order}});
      }
      const auto s = agents::summarize(episodes);
      files.push_back({"summary.json", json{{"episodes", list},
                                            {"mean_zones", s.mean_zones},
                                            {"median_zones", s.median_zones},
                                            {"mean_reward", s.mean_reward}}
                                               .dump(2) +
                                           "\n"});
      break;
    }
    case ScenarioKind::Train: {
      const auto candidates = run_train(config, progress);
      json list = json::array();
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        const std::string id = fmt::format("c{:02}", i);
        const json sidecar = agents::checkpoint_sidecar(c.policy, config.train.ppo, c.stats, {{"seed", c.seed}});
        files.push_back({"checkpoints/" + id + ".bin", agents::checkpoint_bytes(c.policy)});
        files.push_back({"checkpoints/" + id + ".bin.json", sidecar.dump(2) + "\n"});
        if (config.train.method == TrainMethod::Ppo) {
          files.push_back({"training/" + id + ".csv", agents::training_stats_csv(c.stats)});
        } else {
          std::string csv = "epoch,loss\n";
          for (std::size_t e = 0; e < c.bc_loss.size(); ++e) csv += fmt::format("{},{}\n", e, c.bc_loss[e]);
          files.push_back({"training/" + id + ".csv", csv});
        }
        list.push_back({{"id", id},
                        {"seed", c.seed},
                        {"eval_mean_reward", c.evaluation.mean_reward},
                        {"eval_mean_zones", c.evaluation.mean_zones},
                        {"eval_median_zones", c.evaluation.median_zones},
                        {"kept", c.kept}});
      }
      files.push_back({"selection.json", json{{"keep_fraction", config.train.keep_fraction}, {"candidates", list}}
                                                 .dump(2) +
                                             "\n"});
      break;
    }
  }
  return files;
}

std::filesystem::path run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_root,
                                   const std::string& label, const Progress& progress) {
  const auto files = simulate(config, progress);
  const auto dir = bundle_directory(out_root, config.name, label);
  write_bundle(dir, config, files);
  return dir;
}

}  // namespace artheater::harness
