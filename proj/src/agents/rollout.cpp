#include <artheater/agents/rollout.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace artheater::agents {

namespace {

AgentAction choose(const Policy* policy, const Observation& obs, Rng& rng, ActionMode mode) {
  switch (mode) {
    case ActionMode::Greedy: return greedy_action(*policy, obs);
    case ActionMode::Stochastic: return sample_action(*policy, obs, rng);
    case ActionMode::Random: break;
  }
  return random_action(rng);
}

EpisodeResult collect(const CorridorEnv& env, std::uint64_t seed) {
  return {seed, env.trace(), env.events(), env.total_reward(), env.zones_entered(), env.visit_order()};
}

}  // namespace

std::vector<EpisodeResult> rollout(const Policy* policy, const EnvConfig& config, int episodes, std::uint64_t seed,
                                   ActionMode mode) {
  if (!policy && mode != ActionMode::Random) throw EnvConfigError("a policy is required unless actions are random");
  std::vector<EpisodeResult> out;
  CorridorEnv env(config);
  for (int e = 0; e < episodes; ++e) {
    const auto s = derive_seed(seed, static_cast<std::uint64_t>(e));
    Rng rng = make_rng(s, 0xac7);
    Observation obs = env.reset(s);
    while (!env.done()) obs = env.step(choose(policy, obs, rng, mode)).observation;
    out.push_back(collect(env, s));
  }
  return out;
}

std::vector<EpisodeResult> rollout_agents(const Policy& policy, const EnvConfig& config, int agents,
                                          std::uint64_t seed, ActionMode mode) {
  std::vector<CorridorEnv> envs(static_cast<std::size_t>(agents), CorridorEnv(config));
  std::vector<Rng> rngs;
  std::vector<Observation> obs;
  for (int i = 0; i < agents; ++i) {
    const auto s = derive_seed(seed, static_cast<std::uint64_t>(i));
    rngs.push_back(make_rng(s, 0xac7));
    obs.push_back(envs[static_cast<std::size_t>(i)].reset(s));
  }
  for (bool running = true; running;) {
    running = false;
    for (std::size_t i = 0; i < envs.size(); ++i) {
      if (envs[i].done()) continue;
      obs[i] = envs[i].step(choose(&policy, obs[i], rngs[i], mode)).observation;
      running = running || !envs[i].done();
    }
  }
  std::vector<EpisodeResult> out;
  for (int i = 0; i < agents; ++i) {
    out.push_back(collect(envs[static_cast<std::size_t>(i)], derive_seed(seed, static_cast<std::uint64_t>(i))));
  }
  return out;
}

EvalSummary summarize(std::span<const EpisodeResult> episodes) {
  EvalSummary s;
  s.episodes = static_cast<int>(episodes.size());
  if (episodes.empty()) return s;
  std::vector<double> zones;
  for (const auto& e : episodes) {
    zones.push_back(e.zones_entered);
    s.mean_zones += e.zones_entered;
    s.mean_reward += e.reward;
  }
  s.mean_zones /= s.episodes;
  s.mean_reward /= s.episodes;
  std::sort(zones.begin(), zones.end());
  const std::size_t n = zones.size();
  s.median_zones = n % 2 ? zones[n / 2] : 0.5 * (zones[n / 2 - 1] + zones[n / 2]);
  return s;
}

std::vector<std::size_t> select_models(std::span<const double> rewards, double keep_fraction) {
  if (rewards.empty()) throw EmptyCandidates("no candidates to select from");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw EmptyCandidates("keep fraction must be in (0, 1]");
  std::vector<double> sorted(rewards.begin(), rewards.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto k = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(rewards.size()) - 1e-9));
  const double threshold = sorted[std::clamp<std::size_t>(k, 1, sorted.size()) - 1];
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (rewards[i] >= threshold) out.push_back(i);
  }
  return out;
}

nlohmann::json checkpoint_sidecar(const Policy& policy, const PpoConfig& c, const std::vector<IterationStats>& stats,
                                  const nlohmann::json& extra) {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : stats) {
    st.push_back({{"iteration", s.iteration},
                  {"steps", s.steps},
                  {"mean_reward", s.mean_reward},
                  {"episode_length", s.episode_length},
                  {"mean_zones", s.mean_zones}});
  }
  nlohmann::json j = {{"format", "artheater-policy"},
                      {"version", 1},
                      {"input_dim", policy.input_dim},
                      {"hidden", policy.hidden},
                      {"continuous", policy.continuous},
                      {"discrete", policy.discrete},
                      {"activation", "tanh"},
                      {"ppo",
                       {{"gamma", c.gamma},
                        {"lambda", c.lambda},
                        {"clip", c.clip},
                        {"learning_rate", c.learning_rate},
                        {"minibatch", c.minibatch},
                        {"epochs", c.epochs},
                        {"envs", c.envs},
                        {"horizon", c.horizon},
                        {"value_coef", c.value_coef},
                        {"entropy_coef", c.entropy_coef},
                        {"max_grad_norm", c.max_grad_norm},
                        {"reward_scale", c.reward_scale}}},
                      {"stats", st}};
  if (extra.is_object()) j.update(extra);
  return j;
}

void save_checkpoint(const std::filesystem::path& path, const Policy& policy, const nlohmann::json& sidecar) {
  std::ofstream bin(path, std::ios::binary);
  const auto bytes = checkpoint_bytes(policy);
  bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!bin) throw CheckpointError("cannot write " + path.string());
  std::ofstream js(path.string() + ".json");
  js << sidecar.dump(2) << "\n";
  if (!js) throw CheckpointError("cannot write sidecar for " + path.string());
}

Policy load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return policy_from_checkpoint(ss.str());
}

}  // namespace artheater::agents
