#include <artheater/agents/imitation.hpp>

#include <numeric>

namespace artheater::agents {

std::size_t DemonstrationSet::size() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.size();
  return n;
}

AgentAction reconstruct_action(const TraceSample& a, const TraceSample& b, const EnvConfig& config) {
  const double dt = b.t - a.t;
  AgentAction act;
  act.speed = (b.position - a.position).norm() / (config.max_speed * dt);
  act.turn = wrap_angle(b.heading - a.heading) / (deg2rad(config.max_turn_deg) * dt);
  return act.clamped();
}

DemonstrationSet demos_from_traces(std::span<const LocomotionTrace> traces, const EnvConfig& config) {
  DemonstrationSet set;
  CorridorEnv env(config);
  for (const auto& trace : traces) {
    const auto& s = trace.samples;
    if (s.size() < 2) continue;
    std::vector<DemoStep> episode;
    Pose p;
    p.position = s[0].position;
    p.heading = s[0].heading;
    Observation obs = env.reset_to(p);
    for (std::size_t k = 0; k + 1 < s.size() && !env.done(); ++k) {
      episode.push_back({obs, reconstruct_action(s[k], s[k + 1], config)});
      Pose next;
      next.position = s[k + 1].position;
      next.heading = s[k + 1].heading;
      obs = env.step_to(next).observation;
    }
    set.episodes.push_back(std::move(episode));
  }
  return set;
}

AgentAction expert_action(const CorridorEnv& env, const ExpertConfig& config) {
  const auto& cfg = env.config();
  const auto& lay = cfg.layout;
  const Pose& pose = env.pose();

  Vec2 target = lay.exit;
  int watching = -1;
  for (int i = 0; i < kZoneCount; ++i) {
    const Vec2 z = lay.zones[static_cast<std::size_t>(i)];
    const bool here = (pose.position - z).norm() <= lay.zone_radius;
    if (!env.zone_entered(i) || (here && env.time_in_current_zone() < config.watch_seconds)) {
      target = z;
      if (here && env.zone_entered(i)) watching = i;
      break;
    }
  }

  const Vec2 rel = target - pose.position;
  const double dist = rel.norm();
  const double err = wrap_angle(std::atan2(rel.y(), rel.x()) - pose.heading);
  const double max_turn = deg2rad(cfg.max_turn_deg) * cfg.dt;
  AgentAction a;
  a.turn = err / max_turn;
  if (dist < 0.05) {
    a.turn = 0.0;
    a.speed = 0.0;
  } else if (std::abs(err) > deg2rad(60.0)) {
    a.speed = 0.2;
  } else {
    a.speed = std::min(1.0, dist / (cfg.max_speed * cfg.dt));
  }
  if (watching >= 0 && a.speed == 0.0) a.gesture = 1 + watching % 3;
  return a.clamped();
}

std::vector<LocomotionTrace> expert_traces(const EnvConfig& config, int episodes, std::uint64_t seed,
                                           const ExpertConfig& expert) {
  std::vector<LocomotionTrace> out;
  CorridorEnv env(config);
  for (int e = 0; e < episodes; ++e) {
    env.reset(derive_seed(seed, static_cast<std::uint64_t>(e)));
    while (!env.done()) env.step(expert_action(env, expert));
    out.push_back(env.trace());
  }
  return out;
}

namespace {

struct Flat {
  Eigen::MatrixXf obs;
  Eigen::MatrixXf targets;
  std::vector<int> gestures;
};

Flat flatten(const DemonstrationSet& demos) {
  Flat f;
  const auto n = static_cast<Eigen::Index>(demos.size());
  f.obs.resize(kObservationDim, n);
  f.targets.resize(2, n);
  Eigen::Index k = 0;
  for (const auto& ep : demos.episodes) {
    for (const auto& s : ep) {
      f.obs.col(k) = s.observation.cast<float>();
      f.targets(0, k) = static_cast<float>(2.0 * s.action.speed - 1.0);
      f.targets(1, k) = static_cast<float>(s.action.turn);
      f.gestures.push_back(s.action.gesture);
      ++k;
    }
  }
  return f;
}

/// Loss over the columns `idx` of `f` and, if asked, its gradient.
double batch_loss(const Policy& p, const Flat& f, const std::vector<Eigen::Index>& idx, double discrete_weight,
                  Eigen::VectorXf* grad) {
  const auto b = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXf x(kObservationDim, b), y(2, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    x.col(j) = f.obs.col(idx[static_cast<std::size_t>(j)]);
    y.col(j) = f.targets.col(idx[static_cast<std::size_t>(j)]);
  }
  const auto fw = p.forward(x);
  const float inv = 1.0f / static_cast<float>(b);
  const Eigen::MatrixXf diff = fw.mean - y;
  double loss = diff.squaredNorm() * inv;
  Eigen::MatrixXf d_logits = Eigen::MatrixXf::Zero(p.discrete, b);
  const auto w = static_cast<float>(discrete_weight);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto l = fw.logits.col(j);
    const float mx = l.maxCoeff();
    const Eigen::VectorXf e = (l.array() - mx).exp();
    const float z = e.sum();
    const int g = f.gestures[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
    loss += w * (std::log(z) + mx - l[g]) * inv;
    d_logits.col(j) = w * inv * e / z;
    d_logits(g, j) -= w * inv;
  }
  if (grad) {
    *grad = p.backward(fw, 2.0f * inv * diff, d_logits, Eigen::MatrixXf::Zero(1, b), Eigen::VectorXf::Zero(p.continuous));
  }
  return loss;
}

}  // namespace

double bc_loss(const Policy& policy, const DemonstrationSet& demos, const BcConfig& config) {
  if (demos.size() == 0) throw EmptyDemos("no demonstration steps");
  const Flat f = flatten(demos);
  std::vector<Eigen::Index> all(static_cast<std::size_t>(f.obs.cols()));
  std::iota(all.begin(), all.end(), Eigen::Index(0));
  return batch_loss(policy, f, all, config.discrete_weight, nullptr);
}

BcResult bc_train(const DemonstrationSet& demos, Policy policy, const BcConfig& config) {
  if (demos.size() == 0) throw EmptyDemos("no demonstration steps");
  const Flat f = flatten(demos);
  const auto n = static_cast<std::size_t>(f.obs.cols());
  std::vector<Eigen::Index> all(n);
  std::iota(all.begin(), all.end(), Eigen::Index(0));
  BcResult r{std::move(policy), {}};
  r.epoch_loss.push_back(batch_loss(r.policy, f, all, config.discrete_weight, nullptr));
  Adam<float> adam(r.policy.theta.size(), static_cast<float>(config.learning_rate));
  Rng rng = make_rng(config.seed, 0xbc);
  std::vector<Eigen::Index> order = all;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.minibatch)) {
      const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(
                                                              std::min(n, start + static_cast<std::size_t>(config.minibatch))));
      Eigen::VectorXf g;
      batch_loss(r.policy, f, idx, config.discrete_weight, &g);
      adam.step(r.policy.theta, g);
    }
    r.epoch_loss.push_back(batch_loss(r.policy, f, all, config.discrete_weight, nullptr));
  }
  return r;
}

}  // namespace artheater::agents
