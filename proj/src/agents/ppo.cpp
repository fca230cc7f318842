#include <artheater/agents/ppo.hpp>

#include <fmt/format.h>

#include <numeric>

namespace artheater::agents {

void PpoConfig::validate() const {
  if (!(gamma > 0 && gamma <= 1 && lambda >= 0 && lambda <= 1 && clip > 0 && learning_rate > 0 && minibatch > 0 &&
        epochs >= 0 && envs > 0 && horizon > 0 && max_grad_norm > 0 && reward_scale > 0)) {
    throw TrainingConfigError("PPO hyperparameters out of range");
  }
}

template <typename Scalar>
PpoLoss<Scalar> ppo_loss(const PolicyNetwork<Scalar>& net, const PpoBatch<Scalar>& batch, const PpoConfig& config) {
  using Matrix = typename PolicyNetwork<Scalar>::Matrix;
  using Vector = typename PolicyNetwork<Scalar>::Vector;
  const auto f = net.forward(batch.observations);
  const Eigen::Index n = batch.observations.cols();
  const Scalar inv_n = Scalar(1) / Scalar(n);
  const Scalar eps = Scalar(config.clip), cv = Scalar(config.value_coef), ce = Scalar(config.entropy_coef);
  const Scalar half_log_2pi = Scalar(0.5 * std::log(2 * kPi));
  const Vector ls = net.log_std();
  const Vector var = (Scalar(2) * ls).array().exp().matrix();

  Matrix d_mean = Matrix::Zero(net.continuous, n);
  Matrix d_logits = Matrix::Zero(net.discrete, n);
  Matrix d_value = Matrix::Zero(1, n);
  Vector d_ls = Vector::Zero(net.continuous);
  PpoLoss<Scalar> out;

  const Scalar gaussian_entropy = ls.sum() + Scalar(net.continuous) * (half_log_2pi + Scalar(0.5));
  for (Eigen::Index b = 0; b < n; ++b) {
    Scalar logp = 0;
    for (int j = 0; j < net.continuous; ++j) {
      const Scalar d = batch.raw_actions(j, b) - f.mean(j, b);
      logp += -d * d / (Scalar(2) * var[j]) - ls[j] - half_log_2pi;
    }
    const auto l = f.logits.col(b);
    const Scalar mx = l.maxCoeff();
    const Vector e = (l.array() - mx).exp().matrix();
    const Scalar z = e.sum();
    const Vector p = e / z;
    const Vector logp_all = (l.array() - mx - std::log(z)).matrix();
    const int g = batch.gestures[static_cast<std::size_t>(b)];
    logp += logp_all[g];

    const Scalar ratio = std::exp(logp - batch.old_log_probs[b]);
    const Scalar adv = batch.advantages[b];
    const Scalar s1 = ratio * adv;
    const Scalar s2 = std::clamp(ratio, Scalar(1) - eps, Scalar(1) + eps) * adv;
    out.policy -= std::min(s1, s2) * inv_n;
    const bool live = s1 <= s2 || (ratio >= Scalar(1) - eps && ratio <= Scalar(1) + eps);
    const Scalar dlogp = live ? -adv * ratio * inv_n : Scalar(0);

    for (int j = 0; j < net.continuous; ++j) {
      const Scalar d = batch.raw_actions(j, b) - f.mean(j, b);
      d_mean(j, b) = dlogp * d / var[j];
      d_ls[j] += dlogp * (d * d / var[j] - Scalar(1));
    }
    const Scalar h_disc = -(p.array() * logp_all.array()).sum();
    for (int k = 0; k < net.discrete; ++k) {
      d_logits(k, b) = dlogp * ((k == g ? Scalar(1) : Scalar(0)) - p[k]);
      d_logits(k, b) += ce * inv_n * p[k] * (logp_all[k] + h_disc);
    }
    out.entropy += (gaussian_entropy + h_disc) * inv_n;

    const Scalar dv = f.value(0, b) - batch.returns[b];
    out.value += cv * dv * dv * inv_n;
    d_value(0, b) = Scalar(2) * cv * dv * inv_n;
  }
  d_ls.array() -= ce;
  out.total = out.policy + out.value - ce * out.entropy;
  out.gradient = net.backward(f, d_mean, d_logits, d_value, d_ls);
  return out;
}

template PpoLoss<float> ppo_loss(const PolicyNetwork<float>&, const PpoBatch<float>&, const PpoConfig&);
template PpoLoss<double> ppo_loss(const PolicyNetwork<double>&, const PpoBatch<double>&, const PpoConfig&);

Policy make_policy(std::uint64_t seed, const PpoConfig& config) {
  Policy p(kObservationDim);
  Rng rng = make_rng(seed, 0x9011c7);
  p.initialize(rng, static_cast<float>(config.initial_log_std));
  return p;
}

namespace {

struct Rollout {
  int n = 0;
  Eigen::MatrixXf obs, raw;
  std::vector<int> gestures;
  Eigen::VectorXf log_probs, values, rewards;
  std::vector<char> ends;  // episode boundary after this step (terminal or truncated)
};

}  // namespace

TrainingResult ppo_train(const EnvFactory& factory, Policy policy, const TrainingRun& run,
                         const std::function<void(const IterationStats&)>& on_iteration) {
  const auto& c = run.ppo;
  c.validate();
  TrainingResult result{std::move(policy), {}};
  if (run.steps <= 0) return result;
  Policy& net = result.policy;

  const int n_env = c.envs;
  std::vector<CorridorEnv> envs;
  std::vector<Rng> rngs;
  std::vector<std::uint64_t> episodes(static_cast<std::size_t>(n_env), 0);
  Eigen::MatrixXf current(kObservationDim, n_env);
  for (int i = 0; i < n_env; ++i) {
    envs.push_back(factory());
    rngs.push_back(make_rng(run.seed, 0x5000 + static_cast<std::uint64_t>(i)));
    const auto seed = derive_seed(run.seed, (static_cast<std::uint64_t>(i) << 32) | episodes[i]++);
    current.col(i) = envs.back().reset(seed).cast<float>();
  }
  Rng shuffle_rng = make_rng(run.seed, 0x5u);
  Adam<float> adam(net.theta.size(), static_cast<float>(c.learning_rate));

  std::int64_t total = 0;
  double last_reward = 0.0, last_length = 0.0, last_zones = 0.0;
  for (int iteration = 0; total < run.steps; ++iteration) {
    const int horizon = static_cast<int>(std::min<std::int64_t>(c.horizon, (run.steps - total + n_env - 1) / n_env));
    const int m = horizon * n_env;
    Rollout r;
    r.obs.resize(kObservationDim, m);
    r.raw.resize(2, m);
    r.gestures.assign(static_cast<std::size_t>(m), 0);
    r.log_probs.resize(m);
    r.values.resize(m);
    r.rewards.resize(m);
    r.ends.assign(static_cast<std::size_t>(m), 0);
    std::vector<char> terminal(static_cast<std::size_t>(m), 0);

    double ep_reward = 0.0, ep_length = 0.0, ep_zones = 0.0;
    int ep_count = 0;
    const float half_log_2pi = static_cast<float>(0.5 * std::log(2 * kPi));
    for (int t = 0; t < horizon; ++t) {
      const auto f = net.forward(current);
      const Eigen::VectorXf ls = net.log_std();
      for (int i = 0; i < n_env; ++i) {
        const int k = t * n_env + i;
        auto& rng = rngs[static_cast<std::size_t>(i)];
        float logp = 0;
        for (int j = 0; j < 2; ++j) {
          const float e = static_cast<float>(gaussian(rng));
          r.raw(j, k) = f.mean(j, i) + std::exp(ls[j]) * e;
          logp += -0.5f * e * e - ls[j] - half_log_2pi;
        }
        const Eigen::VectorXf l = f.logits.col(i);
        const float mx = l.maxCoeff();
        const Eigen::VectorXf p = (l.array() - mx).exp();
        const float z = p.sum();
        double u = uniform01(rng) * z;
        int g = 0;
        while (g + 1 < p.size() && u >= p[g]) u -= p[g++];
        logp += l[g] - mx - std::log(z);

        r.obs.col(k) = current.col(i);
        r.gestures[static_cast<std::size_t>(k)] = g;
        r.log_probs[k] = logp;
        r.values[k] = f.value(0, i);

        auto& env = envs[static_cast<std::size_t>(i)];
        const auto step = env.step(to_action(r.raw(0, k), r.raw(1, k), g));
        float reward = static_cast<float>(step.reward * c.reward_scale);
        if (step.done()) {
          if (step.truncated) {
            // Time limit, not a real terminal: bootstrap from the final state.
            const auto tail = net.forward(step.observation.cast<float>());
            reward += static_cast<float>(c.gamma) * tail.value(0, 0);
          }
          terminal[static_cast<std::size_t>(k)] = 1;
          ep_reward += env.total_reward();
          ep_length += static_cast<double>(env.trace().samples.size() - 1);
          ep_zones += env.zones_entered();
          ++ep_count;
          const auto seed =
              derive_seed(run.seed, (static_cast<std::uint64_t>(i) << 32) | episodes[static_cast<std::size_t>(i)]++);
          current.col(i) = env.reset(seed).cast<float>();
        } else {
          current.col(i) = step.observation.cast<float>();
        }
        r.rewards[k] = reward;
      }
    }
    total += m;

    // GAE, per environment, backward in time.
    const Eigen::VectorXf last_values = net.forward(current).value.row(0).transpose();
    Eigen::VectorXf adv(m), ret(m);
    for (int i = 0; i < n_env; ++i) {
      float next_value = last_values[i];
      float gae = 0;
      for (int t = horizon - 1; t >= 0; --t) {
        const int k = t * n_env + i;
        const float nonterminal = terminal[static_cast<std::size_t>(k)] ? 0.f : 1.f;
        const float delta = r.rewards[k] + static_cast<float>(c.gamma) * next_value * nonterminal - r.values[k];
        gae = delta + static_cast<float>(c.gamma * c.lambda) * nonterminal * gae;
        adv[k] = gae;
        ret[k] = gae + r.values[k];
        next_value = r.values[k];
      }
    }

    std::vector<int> order(static_cast<std::size_t>(m));
    double loss_sum = 0.0;
    int loss_count = 0;
    for (int epoch = 0; epoch < c.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      for (int i = m - 1; i > 0; --i) std::swap(order[static_cast<std::size_t>(i)], order[shuffle_rng() % (i + 1)]);
      for (int start = 0; start < m; start += c.minibatch) {
        const int b = std::min(c.minibatch, m - start);
        PpoBatch<float> batch;
        batch.observations.resize(kObservationDim, b);
        batch.raw_actions.resize(2, b);
        batch.gestures.resize(static_cast<std::size_t>(b));
        batch.old_log_probs.resize(b);
        batch.advantages.resize(b);
        batch.returns.resize(b);
        for (int j = 0; j < b; ++j) {
          const int k = order[static_cast<std::size_t>(start + j)];
          batch.observations.col(j) = r.obs.col(k);
          batch.raw_actions.col(j) = r.raw.col(k);
          batch.gestures[static_cast<std::size_t>(j)] = r.gestures[static_cast<std::size_t>(k)];
          batch.old_log_probs[j] = r.log_probs[k];
          batch.advantages[j] = adv[k];
          batch.returns[j] = ret[k];
        }
        if (b > 1) {
          const float mean = batch.advantages.mean();
          const float sd = std::sqrt((batch.advantages.array() - mean).square().mean());
          batch.advantages = ((batch.advantages.array() - mean) / (sd + 1e-8f)).matrix();
        }
        auto loss = ppo_loss(net, batch, c);
        if (!std::isfinite(loss.total) || !loss.gradient.allFinite()) {
          throw DivergenceDetected(fmt::format("non-finite loss at iteration {}", iteration));
        }
        clip_gradient(loss.gradient, static_cast<float>(c.max_grad_norm));
        adam.step(net.theta, loss.gradient);
        loss_sum += loss.total;
        ++loss_count;
      }
    }
    if (!net.finite()) throw DivergenceDetected(fmt::format("non-finite parameters at iteration {}", iteration));

    if (ep_count > 0) {
      last_reward = ep_reward / ep_count;
      last_length = ep_length / ep_count;
      last_zones = ep_zones / ep_count;
    }
    IterationStats s{iteration, total, last_reward, last_length, last_zones, loss_count ? loss_sum / loss_count : 0.0};
    result.stats.push_back(s);
    if (on_iteration) on_iteration(s);
  }
  return result;
}

std::string training_stats_csv(const std::vector<IterationStats>& stats) {
  std::string out = "iteration,steps,mean_reward,episode_length\n";
  for (const auto& s : stats) {
    out += fmt::format("{},{},{:.6f},{:.3f}\n", s.iteration, s.steps, s.mean_reward, s.episode_length);
  }
  return out;
}

}  // namespace artheater::agents
