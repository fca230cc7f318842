#pragma once

#include <artheater/agents/env.hpp>
#include <artheater/agents/policy.hpp>

#include <functional>
#include <string>
#include <vector>

namespace artheater::agents {

ARTHEATER_DEFINE_ERROR(DivergenceDetected);
ARTHEATER_DEFINE_ERROR(TrainingConfigError);

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double learning_rate = 3e-4;
  int minibatch = 256;
  int epochs = 3;
  int envs = 18;
  int horizon = 128;  // steps per env per iteration
  double value_coef = 0.5;
  double entropy_coef = 0.001;
  double max_grad_norm = 0.5;
  double reward_scale = 0.01;
  double initial_log_std = -0.5;

  void validate() const;
};

struct TrainingRun {
  std::uint64_t seed = 0;
  std::int64_t steps = 200000;
  PpoConfig ppo;
};

struct IterationStats {
  int iteration = 0;
  std::int64_t steps = 0;
  double mean_reward = 0.0;     // unscaled return of episodes finished this iteration
  double episode_length = 0.0;  // env steps
  double mean_zones = 0.0;
  double loss = 0.0;
};

/// A frozen set of transitions with everything the clipped surrogate needs.
/// Columns are samples.
template <typename Scalar>
struct PpoBatch {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix observations;
  Matrix raw_actions;
  std::vector<int> gestures;
  Vector old_log_probs;
  Vector advantages;
  Vector returns;
};

template <typename Scalar>
struct PpoLoss {
  Scalar total = 0;
  Scalar policy = 0;
  Scalar value = 0;
  Scalar entropy = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gradient;
};

/// Clipped surrogate + value + entropy loss and its exact gradient. The
/// advantages are used as given.
template <typename Scalar>
PpoLoss<Scalar> ppo_loss(const PolicyNetwork<Scalar>& policy, const PpoBatch<Scalar>& batch, const PpoConfig& config);

using EnvFactory = std::function<CorridorEnv()>;

struct TrainingResult {
  Policy policy;
  std::vector<IterationStats> stats;
};

/// Fresh network for `config` with the standard 3 x 128 trunk.
Policy make_policy(std::uint64_t seed, const PpoConfig& config = {});

/// Clipped-surrogate PPO with GAE over `run.ppo.envs` environments stepped
/// in lockstep. Each environment owns RNG streams derived from the run seed.
TrainingResult ppo_train(const EnvFactory& factory, Policy policy, const TrainingRun& run,
                         const std::function<void(const IterationStats&)>& on_iteration = {});

std::string training_stats_csv(const std::vector<IterationStats>& stats);

}  // namespace artheater::agents
