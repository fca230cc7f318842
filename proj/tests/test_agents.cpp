#include <artheater/agents/env.hpp>
#include <artheater/agents/imitation.hpp>
#include <artheater/agents/policy.hpp>
#include <artheater/agents/ppo.hpp>
#include <artheater/agents/rollout.hpp>

#include <doctest.h>

#include <filesystem>

using namespace artheater;
using namespace artheater::agents;

namespace {

Pose at(double x, double y, double heading = 0.0) {
  Pose p;
  p.position = {x, y};
  p.heading = heading;
  return p;
}

double run_random(CorridorEnv& env, std::uint64_t seed) {
  Rng rng = make_rng(seed, 77);
  env.reset(seed);
  double total = 0.0;
  while (!env.done()) total += env.step(random_action(rng)).reward;
  return total;
}

}  // namespace

TEST_CASE("reset is deterministic, contained and normalized") {
  CorridorEnv env;
  const Observation a = env.reset(42);
  const Vec2 p = env.pose().position;
  const Observation b = env.reset(42);
  CHECK(a == b);
  CHECK(env.pose().position == p);
  CHECK(a.size() == 27);

  for (std::uint64_t s = 0; s < 10000; ++s) {
    const Observation o = env.reset(s);
    const Vec2 q = env.pose().position;
    CHECK((q - env.config().layout.booth).norm() <= 1.5 + 1e-12);
    CHECK(geometry::point_in_walkable(env.scene(), q));
    CHECK(geometry::nearest_edge_distance(env.scene(), q) >= 0.3);
    CHECK(o.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("stepping before reset throws") {
  CorridorEnv env;
  CHECK_THROWS_AS(env.step({}), StepBeforeReset);
}

TEST_CASE("observations stay in range along random episodes") {
  CorridorEnv env;
  Rng rng = make_rng(3);
  for (int e = 0; e < 20; ++e) {
    env.reset(static_cast<std::uint64_t>(e));
    while (!env.done()) {
      const auto r = env.step(random_action(rng));
      CHECK(r.observation.cwiseAbs().maxCoeff() <= 1.0);
      CHECK(geometry::nearest_edge_distance(env.scene(), env.pose().position) >= 0.3 - 1e-9);
    }
  }
}

TEST_CASE("first zone entry pays 48.2") {
  CorridorEnv env;
  env.reset_to(at(6.5, 2.0));
  const auto r = env.step_to(at(7.5, 2.0));
  // entry + 0.2 s of staying; the next zone is 5.5 m away, outside the proximity radius
  CHECK(r.reward == doctest::Approx(48.2 + 0.2));
  CHECK(env.visit_order() == std::vector<int>{0});
}

TEST_CASE("entry rewards follow entry order, or zone identity") {
  CorridorEnv env;
  env.reset_to(at(18.0, 3.5));
  CHECK(env.step_to(at(18.0, 2.0)).reward == doctest::Approx(48.2 + 0.2));
  EnvConfig cfg;
  cfg.reward.entry_by_identity = true;
  CorridorEnv id(cfg);
  id.reset_to(at(18.0, 3.5));
  CHECK(id.step_to(at(18.0, 2.0)).reward == doctest::Approx(85.5 + 0.2));
}

TEST_CASE("wall contact costs 0.01 per second") {
  CorridorEnv env;
  env.reset_to(at(2.0, 0.31, -kPi / 2));
  double total = 0.0;
  for (int k = 0; k < 5; ++k) total += env.step({1.0, 0.0, 0}).reward;
  CHECK(total == doctest::Approx(-0.01));
  CHECK(env.pose().position.y() == doctest::Approx(0.3));
}

TEST_CASE("staying reward stops at 17 s") {
  CorridorEnv env;
  env.reset_to(at(13.0, 2.0));
  double total = 0.0;
  for (int k = 0; k < 100; ++k) total += env.step({0.0, 0.0, 0}).reward;
  // the neighbouring zones are 5 m away, beyond the proximity radius
  CHECK(total == doctest::Approx(48.2 + 17.0));
}

TEST_CASE("env reward equals the trace oracle") {
  EnvConfig cfg;
  CorridorEnv env(cfg);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const double r = run_random(env, s);
    CHECK(r == doctest::Approx(env.total_reward()).epsilon(1e-12));
    CHECK(std::abs(r - episode_reward_oracle(env.trace(), cfg.layout, cfg.reward)) <= 1e-6);
  }
  // A perfect scripted run that watches each clip in full.
  ExpertConfig patient;
  patient.watch_seconds = 17.0;
  const auto traces = expert_traces(cfg, 3, 9, patient);
  for (const auto& t : traces) {
    const double oracle = episode_reward_oracle(t, cfg.layout, cfg.reward);
    CHECK(oracle > 48.2 + 63.7 + 85.5 + 41.0 + 3 * 17.0 - 1e-9);
    env.reset_to(at(t.samples[0].position.x(), t.samples[0].position.y(), t.samples[0].heading));
    for (std::size_t k = 1; k < t.samples.size(); ++k) {
      env.step_to(at(t.samples[k].position.x(), t.samples[k].position.y(), t.samples[k].heading));
    }
    CHECK(std::abs(env.total_reward() - oracle) <= 1e-6);
  }
  LocomotionTrace idle{{{0, {2, 2}, 0}, {10, {2, 2}, 0}}};
  CHECK(episode_reward_oracle(idle, cfg.layout, cfg.reward) == 0.0);
}

TEST_CASE("policy network shapes") {
  Policy p = make_policy(1);
  CHECK(p.hidden == std::vector<int>{128, 128, 128});
  const auto f = p.forward(Eigen::MatrixXf::Random(kObservationDim, 5));
  CHECK(f.mean.rows() == 2);
  CHECK(f.logits.rows() == 4);
  CHECK(f.value.rows() == 1);
  CHECK(f.mean.cols() == 5);
  CHECK(p.log_std().allFinite());
}

TEST_CASE("PPO surrogate gradient matches finite differences") {
  Rng rng = make_rng(5);
  PolicyNetwork<double> net(kObservationDim);
  net.initialize(rng, -0.5);
  // Perturb the heads so nothing sits at its initialization symmetry.
  for (Eigen::Index i = net.mean_head.w; i < net.theta.size(); ++i) net.theta[i] += 0.1 * gaussian(rng);

  const int n = 64;
  PpoBatch<double> batch;
  batch.observations = Eigen::MatrixXd::NullaryExpr(kObservationDim, n, [&] { return uniform(rng, -1, 1); });
  const auto f = net.forward(batch.observations);
  batch.raw_actions = f.mean + 0.6 * Eigen::MatrixXd::NullaryExpr(2, n, [&] { return gaussian(rng); });
  batch.gestures.resize(n);
  batch.old_log_probs.resize(n);
  batch.advantages.resize(n);
  batch.returns.resize(n);
  for (int b = 0; b < n; ++b) {
    batch.gestures[static_cast<std::size_t>(b)] = static_cast<int>(rng() % 4);
    batch.advantages[b] = gaussian(rng);
    batch.returns[b] = gaussian(rng);
  }
  // Old log-probs near the current ones so most samples sit inside the clip range.
  PpoConfig cfg;
  {
    PpoBatch<double> probe = batch;
    probe.old_log_probs.setZero();
    probe.advantages.setOnes();
    // ratio = exp(logp) when old = 0; recover logp per sample by single-sample losses
    for (int b = 0; b < n; ++b) {
      PpoBatch<double> one;
      one.observations = batch.observations.col(b);
      one.raw_actions = batch.raw_actions.col(b);
      one.gestures = {batch.gestures[static_cast<std::size_t>(b)]};
      one.old_log_probs = Eigen::VectorXd::Zero(1);
      one.advantages = Eigen::VectorXd::Constant(1, -1.0);
      one.returns = Eigen::VectorXd::Zero(1);
      PpoConfig wide = cfg;
      wide.clip = 1e9;
      wide.value_coef = 0;
      wide.entropy_coef = 0;
      const double ratio = ppo_loss(net, one, wide).policy;  // = ratio * 1
      batch.old_log_probs[b] = std::log(ratio) + 0.1 * gaussian(rng);
    }
  }

  const auto loss = ppo_loss(net, batch, cfg);
  REQUIRE(loss.gradient.size() == net.theta.size());
  std::vector<Eigen::Index> coords;
  for (int i = 0; i < 200; ++i) coords.push_back(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(net.theta.size())));
  for (int j = 0; j < 2; ++j) coords.push_back(net.log_std_offset + j);
  for (Eigen::Index i = net.value_head.w; i < net.value_head.w + 5; ++i) coords.push_back(i);
  Eigen::VectorXd analytic(coords.size()), numeric(coords.size());
  for (std::size_t c = 0; c < coords.size(); ++c) {
    const double h = 1e-6;
    PolicyNetwork<double> plus = net, minus = net;
    plus.theta[coords[c]] += h;
    minus.theta[coords[c]] -= h;
    numeric[static_cast<Eigen::Index>(c)] = (ppo_loss(plus, batch, cfg).total - ppo_loss(minus, batch, cfg).total) / (2 * h);
    analytic[static_cast<Eigen::Index>(c)] = loss.gradient[coords[c]];
  }
  const double rel = (analytic - numeric).norm() / numeric.norm();
  CHECK(rel < 1e-4);
}

TEST_CASE("PPO with no budget returns the input policy") {
  TrainingRun run;
  run.steps = 0;
  const Policy p = make_policy(4);
  const auto r = ppo_train([] { return CorridorEnv(); }, p, run);
  CHECK(r.policy.theta == p.theta);
  CHECK(r.stats.empty());
}

TEST_CASE("PPO is deterministic for a seed") {
  TrainingRun run;
  run.seed = 11;
  run.steps = 2 * 18 * 32;
  run.ppo.horizon = 32;
  const auto a = ppo_train([] { return CorridorEnv(); }, make_policy(11), run);
  const auto b = ppo_train([] { return CorridorEnv(); }, make_policy(11), run);
  REQUIRE(a.stats.size() == 2);
  CHECK(training_stats_csv(a.stats) == training_stats_csv(b.stats));
  CHECK(a.policy.theta == b.policy.theta);
  CHECK(a.stats.back().steps == run.steps);
  CHECK(training_stats_csv(a.stats).rfind("iteration,steps,mean_reward,episode_length\n", 0) == 0);
}

TEST_CASE("checkpoint round trip is exact") {
  const Policy p = make_policy(6);
  const Policy q = policy_from_checkpoint(checkpoint_bytes(p));
  CHECK(q.theta == p.theta);
  CHECK(q.hidden == p.hidden);
  const auto bytes = checkpoint_bytes(p);
  CHECK(bytes.substr(0, 8) == std::string("ARTHPOL\0", 8));
  CHECK_THROWS_AS(policy_from_checkpoint(bytes.substr(0, bytes.size() - 1)), CheckpointError);
  CHECK_THROWS_AS(policy_from_checkpoint("garbage"), CheckpointError);

  const auto dir = std::filesystem::temp_directory_path() / "artheater_ckpt_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "p.bin", p, checkpoint_sidecar(p, {}, {}));
  CHECK(load_checkpoint(dir / "p.bin").theta == p.theta);
  CHECK(std::filesystem::exists(dir / "p.bin.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("model selection keeps the top fraction") {
  std::vector<double> r;
  for (int i = 1; i <= 10; ++i) r.push_back(i);
  const auto kept = select_models(r, 0.30);
  CHECK(kept == std::vector<std::size_t>{7, 8, 9});
  const std::vector<double> same(7, 2.5);
  CHECK(select_models(same, 0.30).size() == 7);
  std::vector<double> twenty;
  for (int i = 0; i < 20; ++i) twenty.push_back(std::sin(i * 1.7) * 100);
  CHECK(select_models(twenty, 0.30).size() == 6);
  CHECK_THROWS_AS(select_models(std::vector<double>{}, 0.3), EmptyCandidates);
  std::vector<std::pair<std::string, double>> named = {{"a", 3}, {"b", 9}, {"c", 1}, {"d", 7}};
  CHECK(select_models(named, 0.5) == std::vector<std::string>{"b", "d"});
}

TEST_CASE("reconstructed actions replay the trace") {
  EnvConfig cfg;
  const auto traces = expert_traces(cfg, 2, 1);
  const auto demos = demos_from_traces(traces, cfg);
  REQUIRE(demos.episodes.size() == 2);
  CorridorEnv env(cfg);
  const auto& t = traces[0];
  env.reset_to(at(t.samples[0].position.x(), t.samples[0].position.y(), t.samples[0].heading));
  for (std::size_t k = 0; k < demos.episodes[0].size(); ++k) {
    CHECK((env.observe() - demos.episodes[0][k].observation).norm() < 1e-9);
    env.step(demos.episodes[0][k].action);
    CHECK((env.pose().position - t.samples[k + 1].position).norm() < 1e-9);
  }
}

TEST_CASE("behavior cloning fits a straight-line expert") {
  EnvConfig cfg;
  cfg.episode_seconds = 4.0;
  std::vector<LocomotionTrace> traces;
  Rng rng = make_rng(8);
  for (int e = 0; e < 8; ++e) {
    LocomotionTrace t;
    const Vec2 start(uniform(rng, 1, 3), uniform(rng, 1, 3));
    for (int k = 0; k <= 20; ++k) t.samples.push_back({k * 0.2, start + Vec2(0.7 * 1.4 * 0.2 * k, 0), 0.0});
    traces.push_back(t);
  }
  const auto demos = demos_from_traces(traces, cfg);
  CHECK(demos.size() == 160);
  BcConfig bc;
  const Policy init = make_policy(2);
  CHECK(bc_train(demos, init, BcConfig{0}).policy.theta == init.theta);
  const auto r = bc_train(demos, init, bc);
  CHECK(r.epoch_loss.size() == 201);
  CHECK(r.epoch_loss.back() <= r.epoch_loss.front());
  double err = 0.0;
  for (const auto& ep : demos.episodes) {
    for (const auto& s : ep) {
      const AgentAction a = greedy_action(r.policy, s.observation);
      err += std::abs(a.speed - s.action.speed) + std::abs(a.turn - s.action.turn);
    }
  }
  CHECK(err / (2.0 * demos.size()) < 0.05);
  CHECK_THROWS_AS(bc_train(DemonstrationSet{}, init, bc), EmptyDemos);
}

TEST_CASE("rollouts are contained and agents are independent") {
  EnvConfig cfg;
  const auto eps = rollout(nullptr, cfg, 10, 3, ActionMode::Random);
  REQUIRE(eps.size() == 10);
  CorridorEnv env(cfg);
  for (const auto& e : eps) {
    for (const auto& s : e.trace.samples) CHECK(geometry::point_in_walkable(env.scene(), s.position));
  }
  const Policy p = make_policy(1);
  const auto six = rollout_agents(p, cfg, 6, 21, ActionMode::Stochastic);
  REQUIRE(six.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = i + 1; j < 6; ++j) CHECK(six[i].trace.samples[1].position != six[j].trace.samples[1].position);
  }
  const auto again = rollout_agents(p, cfg, 6, 21, ActionMode::Stochastic);
  for (std::size_t i = 0; i < 6; ++i) CHECK(again[i].reward == six[i].reward);
}
