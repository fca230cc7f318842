#pragma once

#include <artheater/agents/rollout.hpp>
#include <artheater/geometry/twin.hpp>
#include <artheater/harness/bundle.hpp>
#include <artheater/harness/config.hpp>
#include <artheater/harness/records.hpp>
#include <artheater/stage/engine.hpp>

#include <functional>
#include <optional>

namespace artheater::harness {

using Progress = std::function<void(const std::string&)>;

/// Walls around [0, length] x [0, width].
geometry::OcclusionScene rectangle_scene(const Box2& box, double wall_height = 2.5);
/// The config's scene file, or a 30 m x 4 m hallway. Throws SceneLoadError.
geometry::OcclusionScene load_scene(const ScenarioConfig& config);
/// The config's cue sheet, or the built-in three-stage corridor sheet.
stage::CueSheet load_cue_sheet(const ScenarioConfig& config);
/// Every zone of every stage in sheet order, dwelling for the clip, then the
/// stage's spiral.
std::vector<Waypoint> cue_sheet_tour(const stage::CueSheet& sheet);

struct TheaterRun {
  std::vector<TraceRecord> trace;
  std::vector<stage::StageEvent> events;
  std::string guidance_csv;
  std::optional<double> all_zones_time;  // when the last zone's clip started
};

TheaterRun run_theater(const ScenarioConfig& config);

struct DistortionRun {
  std::vector<std::vector<TraceRecord>> traces;  // one per participant
  std::string timeline_csv;
};

DistortionRun run_distortion(const ScenarioConfig& config);

struct BubbleRun {
  std::vector<std::vector<TraceRecord>> traces;
  std::vector<std::vector<bubbles::NoteEvent>> notes;
  std::string bubbles_csv;
};

BubbleRun run_bubbles(const ScenarioConfig& config);

std::vector<agents::EpisodeResult> run_rollout(const ScenarioConfig& config);
std::vector<TraceRecord> episode_records(const agents::EpisodeResult& episode, const agents::EnvConfig& env);

struct TrainedCandidate {
  std::uint64_t seed = 0;
  agents::Policy policy;
  std::vector<agents::IterationStats> stats;  // PPO
  std::vector<double> bc_loss;                // behavior cloning, per epoch
  agents::EvalSummary evaluation;
  bool kept = false;
};

std::vector<TrainedCandidate> run_train(const ScenarioConfig& config, const Progress& progress = {});

/// Per-segment locomotion metrics over the windows the trace covers; zeros
/// for a trace too short to measure.
distortion::TraceMetrics covered_metrics(const LocomotionTrace& trace, const distortion::RoomModel& room,
                                         const distortion::TreatmentTimeline& timeline);

/// Runs the scenario and returns the bundle files (manifest excluded).
std::vector<Artifact> simulate(const ScenarioConfig& config, const Progress& progress = {});

/// simulate() + write_bundle() under out/<name>/<label>.
std::filesystem::path run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_root,
                                   const std::string& label, const Progress& progress = {});

}  // namespace artheater::harness
