#pragma once

#include <artheater/agents/imitation.hpp>
#include <artheater/agents/ppo.hpp>
#include <artheater/agents/rollout.hpp>
#include <artheater/bubbles/orchestra.hpp>
#include <artheater/distortion/distortion.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace artheater::harness {

ARTHEATER_DEFINE_ERROR(ConfigError);
ARTHEATER_DEFINE_ERROR(SceneLoadError);
ARTHEATER_DEFINE_ERROR(IncompleteBundle);

inline constexpr int kConfigVersion = 1;

enum class ScenarioKind { Theater, Distortion, Bubbles, Rollout, Train };
enum class WalkerKind { Waypoint, Wander, Guided, Policy };
/// Which aid a Guided walker reads. Stage uses the aid the cue sheet assigns
/// to the current stage, falling back to the compass where it assigns none.
enum class AidKind { Stage, Particle, Arrow, Radar, Compass };
enum class TrainMethod { Ppo, Bc };

std::string to_string(ScenarioKind k);
std::string to_string(WalkerKind k);
std::string to_string(AidKind k);

struct Waypoint {
  Vec2 position = Vec2::Zero();
  double dwell = 0.0;
};

struct WalkerSpec {
  WalkerKind kind = WalkerKind::Waypoint;
  double speed = 1.4;  // m/s, (0, 3]
  std::optional<Vec2> start;
  double heading = 0.0;
  double head_height = 1.6;
  double body_radius = 0.25;
  std::vector<Waypoint> points;  // empty in a Theater scenario: tour the cue sheet
  double turn_noise_deg = 45.0;  // Wander, deg per sqrt(s)
  double max_turn_deg = 180.0;   // Guided, deg/s
  AidKind aid = AidKind::Stage;
  std::string checkpoint;  // Policy; empty = uniform random actions
};

struct DistortionParams {
  distortion::RoomModel room;
  distortion::DistortionTreatment treatment;
  distortion::TreatmentTimeline timeline = distortion::TreatmentTimeline::standard();
  distortion::DensityWindowSpec density;
  distortion::ParticleFieldConfig particles;
  int participants = 1;
};

struct BubbleParams {
  bubbles::PlaySpace space;
  bubbles::BubbleConfig bubbles;
  int participants = 1;
};

struct RolloutParams {
  int episodes = 10;
  int agents = 1;
  agents::ActionMode mode = agents::ActionMode::Greedy;
};

struct TrainParams {
  TrainMethod method = TrainMethod::Ppo;
  long long steps = 200000;
  int candidates = 1;
  double keep_fraction = 0.30;
  int eval_episodes = 20;
  agents::PpoConfig ppo;
  agents::BcConfig bc;
  int expert_episodes = 20;
  agents::ExpertConfig expert;
};

struct ScenarioConfig {
  int version = kConfigVersion;
  std::string name;
  ScenarioKind kind = ScenarioKind::Theater;
  std::uint64_t seed = 0;
  double dt = 0.02;
  double duration = 0.0;
  std::string scene;      // path as written, Theater only
  std::string cue_sheet;  // path as written, Theater only
  WalkerSpec walker;
  DistortionParams distortion;
  BubbleParams bubbles;
  RolloutParams rollout;
  TrainParams train;
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::filesystem::path resolve(const std::string& ref) const;
  agents::EnvConfig env_config() const;
};

/// Parses and validates a config document. With `check_files` the scene,
/// cue sheet and checkpoint references must exist under `base_dir`.
ScenarioConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir, bool check_files = true);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Normalized document: every field spelled out, paths as written.
nlohmann::json config_to_json(const ScenarioConfig& config);

}  // namespace artheater::harness
