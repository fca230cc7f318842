#pragma once

#include <artheater/agents/env.hpp>
#include <artheater/agents/policy.hpp>
#include <artheater/agents/ppo.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <vector>

namespace artheater::agents {

ARTHEATER_DEFINE_ERROR(EmptyCandidates);

enum class ActionMode { Greedy, Stochastic, Random };

struct EpisodeResult {
  std::uint64_t seed = 0;
  LocomotionTrace trace;
  std::vector<stage::StageEvent> events;
  double reward = 0.0;
  int zones_entered = 0;
  std::vector<int> visit_order;
};

/// Runs `episodes` independent episodes. Episode k resets with a seed derived
/// from (`seed`, k). `policy` may be null for ActionMode::Random.
std::vector<EpisodeResult> rollout(const Policy* policy, const EnvConfig& config, int episodes, std::uint64_t seed,
                                   ActionMode mode = ActionMode::Greedy);

/// Several agents sharing one policy, stepped together in one scene. They
/// do not collide with each other.
std::vector<EpisodeResult> rollout_agents(const Policy& policy, const EnvConfig& config, int agents,
                                          std::uint64_t seed, ActionMode mode = ActionMode::Greedy);

struct EvalSummary {
  int episodes = 0;
  double mean_zones = 0.0;
  double median_zones = 0.0;
  double mean_reward = 0.0;
};

EvalSummary summarize(std::span<const EpisodeResult> episodes);

/// Indices of the candidates whose reward reaches the k-th largest reward,
/// k = ceil(keep_fraction * n). Ties at the threshold are kept; indices come
/// back in input order.
std::vector<std::size_t> select_models(std::span<const double> rewards, double keep_fraction = 0.30);

template <typename T>
std::vector<T> select_models(const std::vector<std::pair<T, double>>& candidates, double keep_fraction = 0.30) {
  std::vector<double> rewards;
  for (const auto& c : candidates) rewards.push_back(c.second);
  std::vector<T> out;
  for (auto i : select_models(rewards, keep_fraction)) out.push_back(candidates[i].first);
  return out;
}

nlohmann::json checkpoint_sidecar(const Policy& policy, const PpoConfig& config,
                                  const std::vector<IterationStats>& stats, const nlohmann::json& extra = {});

/// Writes `<path>` (binary) and `<path>.json` (sidecar).
void save_checkpoint(const std::filesystem::path& path, const Policy& policy, const nlohmann::json& sidecar);
Policy load_checkpoint(const std::filesystem::path& path);

}  // namespace artheater::agents
