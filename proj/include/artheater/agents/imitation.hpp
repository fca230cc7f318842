#pragma once

#include <artheater/agents/env.hpp>
#include <artheater/agents/policy.hpp>

#include <span>
#include <vector>

namespace artheater::agents {

ARTHEATER_DEFINE_ERROR(EmptyDemos);

struct DemoStep {
  Observation observation;
  AgentAction action;
};

struct DemonstrationSet {
  std::vector<std::vector<DemoStep>> episodes;

  std::size_t size() const;
};

/// Finite-difference action that moves the agent from `a` to `b` in one
/// step, clamped to the action limits. Gesture is 0.
AgentAction reconstruct_action(const TraceSample& a, const TraceSample& b, const EnvConfig& config);

/// Replays each trace through the environment to rebuild the observations
/// and pairs them with reconstructed actions.
DemonstrationSet demos_from_traces(std::span<const LocomotionTrace> traces, const EnvConfig& config);

/// Scripted teacher: visits the zones in index order, stands at each center
/// for `watch_seconds`, then heads for the exit.
struct ExpertConfig {
  double watch_seconds = 2.0;
};

AgentAction expert_action(const CorridorEnv& env, const ExpertConfig& config = {});

std::vector<LocomotionTrace> expert_traces(const EnvConfig& config, int episodes, std::uint64_t seed,
                                           const ExpertConfig& expert = {});

struct BcConfig {
  int epochs = 200;
  int minibatch = 256;
  double learning_rate = 1e-3;
  double discrete_weight = 0.1;
  std::uint64_t seed = 0;
};

struct BcResult {
  Policy policy;
  std::vector<double> epoch_loss;  // full-set loss before training, then after each epoch
};

/// Mean-squared error on the continuous mean plus weighted cross-entropy on
/// the gesture logits, over the whole set.
double bc_loss(const Policy& policy, const DemonstrationSet& demos, const BcConfig& config = {});

BcResult bc_train(const DemonstrationSet& demos, Policy policy, const BcConfig& config = {});

}  // namespace artheater::agents
