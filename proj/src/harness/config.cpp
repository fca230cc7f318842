#include <artheater/harness/config.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace artheater::harness {

namespace {

using nlohmann::json;

/// Typed view of one JSON object that remembers which keys were read, so
/// anything left over can be rejected.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ConfigError(where_ + ": missing field '" + key + "'");
    return j_.at(key);
  }

  template <typename T>
  T required(const std::string& key) {
    return convert<T>(at(key), key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    return has(key) ? convert<T>(j_.at(key), key) : fallback;
  }

  std::string where(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(where_ + ": unknown field '" + item.key() + "'");
    }
  }

 private:
  template <typename T>
  T convert(const json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, Vec2>) {
        if (!v.is_array() || v.size() != 2) throw ConfigError(where_ + "." + key + ": expected [x, y]");
        return Vec2(v[0].get<double>(), v[1].get<double>());
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
        return v.get<double>();
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
        if (std::is_unsigned_v<T> && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw ConfigError(where_ + "." + key + ": expected a non-negative integer");
        }
        return v.get<T>();
      } else {
        return v.get<T>();
      }
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename E, std::size_t N>
E enum_from(const std::string& s, const std::array<std::pair<const char*, E>, N>& names, const std::string& where) {
  for (const auto& [name, value] : names) {
    if (s == name) return value;
  }
  throw ConfigError(where + ": unknown value '" + s + "'");
}

constexpr std::array<std::pair<const char*, ScenarioKind>, 5> kScenarioNames{{{"Theater", ScenarioKind::Theater},
                                                                             {"Distortion", ScenarioKind::Distortion},
                                                                             {"Bubbles", ScenarioKind::Bubbles},
                                                                             {"Rollout", ScenarioKind::Rollout},
                                                                             {"Train", ScenarioKind::Train}}};
constexpr std::array<std::pair<const char*, WalkerKind>, 4> kWalkerNames{{{"Waypoint", WalkerKind::Waypoint},
                                                                         {"Wander", WalkerKind::Wander},
                                                                         {"Guided", WalkerKind::Guided},
                                                                         {"Policy", WalkerKind::Policy}}};
constexpr std::array<std::pair<const char*, AidKind>, 5> kAidNames{{{"stage", AidKind::Stage},
                                                                    {"particle", AidKind::Particle},
                                                                    {"arrow", AidKind::Arrow},
                                                                    {"radar", AidKind::Radar},
                                                                    {"compass", AidKind::Compass}}};
constexpr std::array<std::pair<const char*, agents::ActionMode>, 3> kModeNames{
    {{"Greedy", agents::ActionMode::Greedy},
     {"Stochastic", agents::ActionMode::Stochastic},
     {"Random", agents::ActionMode::Random}}};
constexpr std::array<std::pair<const char*, TrainMethod>, 2> kMethodNames{
    {{"ppo", TrainMethod::Ppo}, {"bc", TrainMethod::Bc}}};

template <typename E, std::size_t N>
std::string enum_name(E value, const std::array<std::pair<const char*, E>, N>& names) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "?";
}

void check_positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be positive");
}

WalkerSpec parse_walker(const json& j) {
  Fields f(j, "walker");
  WalkerSpec w;
  w.kind = enum_from(f.required<std::string>("kind"), kWalkerNames, "walker.kind");
  w.speed = f.get("speed", w.speed);
  if (f.has("start")) w.start = f.required<Vec2>("start");
  w.heading = f.get("heading", w.heading);
  w.head_height = f.get("head_height", w.head_height);
  w.body_radius = f.get("body_radius", w.body_radius);
  if (f.has("points")) {
    const json& pts = f.at("points");
    if (!pts.is_array()) throw ConfigError("walker.points: expected an array");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Fields p(pts[i], "walker.points[" + std::to_string(i) + "]");
      w.points.push_back({p.required<Vec2>("at"), p.get("dwell", 0.0)});
      if (w.points.back().dwell < 0.0) throw ConfigError(p.where("dwell") + " must be >= 0");
      p.finish();
    }
  }
  w.turn_noise_deg = f.get("turn_noise_deg", w.turn_noise_deg);
  w.max_turn_deg = f.get("max_turn_deg", w.max_turn_deg);
  if (f.has("aid")) w.aid = enum_from(f.required<std::string>("aid"), kAidNames, "walker.aid");
  w.checkpoint = f.get<std::string>("checkpoint", "");
  f.finish();

  if (!(w.speed > 0.0 && w.speed <= 3.0)) throw ConfigError("walker.speed must be in (0, 3] m/s");
  check_positive(w.head_height, "walker.head_height");
  check_positive(w.body_radius, "walker.body_radius");
  check_positive(w.max_turn_deg, "walker.max_turn_deg");
  if (w.turn_noise_deg < 0.0) throw ConfigError("walker.turn_noise_deg must be >= 0");
  if (w.kind != WalkerKind::Waypoint && !w.points.empty()) throw ConfigError("walker.points is for Waypoint walkers");
  if (w.kind != WalkerKind::Policy && !w.checkpoint.empty()) throw ConfigError("walker.checkpoint is for Policy walkers");
  return w;
}

void parse_distortion(const json& j, DistortionParams& d) {
  Fields f(j, "distortion");
  try {
    d.treatment = distortion::treatment_from_json(f.at("treatment"));
    if (f.has("timeline")) d.timeline = distortion::timeline_from_json(f.at("timeline"));
  } catch (const Error& e) {
    throw ConfigError(std::string("distortion: ") + e.what());
  }
  if (f.has("room")) {
    Fields r(f.at("room"), "distortion.room");
    d.room.width = r.get("width", d.room.width);
    d.room.length = r.get("length", d.room.length);
    d.room.height = r.get("height", d.room.height);
    d.room.tile = r.get("tile", d.room.tile);
    d.room.reference_volume = r.get("reference_volume", d.room.reference_volume);
    r.finish();
    try {
      d.room.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("distortion.room: ") + e.what());
    }
  }
  if (f.has("density")) {
    Fields w(f.at("density"), "distortion.density");
    d.density.before_end = w.get("before_end", d.density.before_end);
    d.density.after_end = w.get("after_end", d.density.after_end);
    w.finish();
    if (d.density.before_end < 0 || d.density.after_end < 0 || d.density.before_end + d.density.after_end <= 0) {
      throw ConfigError("distortion.density windows must be non-empty");
    }
  }
  if (f.has("particles")) {
    Fields p(f.at("particles"), "distortion.particles");
    d.particles.radius = p.get("radius", d.particles.radius);
    d.particles.speed = p.get("speed", d.particles.speed);
    d.particles.density = p.get("density", d.particles.density);
    d.particles.redirect_mean = p.get("redirect_mean", d.particles.redirect_mean);
    p.finish();
  }
  d.participants = f.get("participants", d.participants);
  f.finish();
  if (d.participants < 1) throw ConfigError("distortion.participants must be >= 1");
}

void parse_bubbles(const json& j, BubbleParams& b) {
  Fields f(j, "bubbles");
  b.space.side = f.get("side", b.space.side);
  b.space.center = f.get("center", b.space.center);
  b.bubbles.diameter = f.get("diameter", b.bubbles.diameter);
  b.bubbles.speed = f.get("speed", b.bubbles.speed);
  b.bubbles.altitude = f.get("altitude", b.bubbles.altitude);
  b.bubbles.reaim_mean = f.get("reaim_mean", b.bubbles.reaim_mean);
  b.participants = f.get("participants", b.participants);
  f.finish();
  check_positive(b.space.side, "bubbles.side");
  check_positive(b.bubbles.diameter, "bubbles.diameter");
  if (b.bubbles.diameter >= b.space.side) throw ConfigError("bubbles.diameter must be smaller than the play space");
  if (b.bubbles.speed < 0.0) throw ConfigError("bubbles.speed must be >= 0");
  if (b.participants < 1) throw ConfigError("bubbles.participants must be >= 1");
}

void parse_rollout(const json& j, RolloutParams& r) {
  Fields f(j, "rollout");
  r.episodes = f.get("episodes", r.episodes);
  r.agents = f.get("agents", r.agents);
  if (f.has("mode")) r.mode = enum_from(f.required<std::string>("mode"), kModeNames, "rollout.mode");
  f.finish();
  if (r.episodes < 1) throw ConfigError("rollout.episodes must be >= 1");
  if (r.agents < 1) throw ConfigError("rollout.agents must be >= 1");
}

void parse_train(const json& j, TrainParams& t) {
  Fields f(j, "train");
  if (f.has("method")) t.method = enum_from(f.required<std::string>("method"), kMethodNames, "train.method");
  t.steps = f.get("steps", t.steps);
  t.candidates = f.get("candidates", t.candidates);
  t.keep_fraction = f.get("keep_fraction", t.keep_fraction);
  t.eval_episodes = f.get("eval_episodes", t.eval_episodes);
  if (f.has("ppo")) {
    Fields p(f.at("ppo"), "train.ppo");
    auto& c = t.ppo;
    c.gamma = p.get("gamma", c.gamma);
    c.lambda = p.get("lambda", c.lambda);
    c.clip = p.get("clip", c.clip);
    c.learning_rate = p.get("learning_rate", c.learning_rate);
    c.minibatch = p.get("minibatch", c.minibatch);
    c.epochs = p.get("epochs", c.epochs);
    c.envs = p.get("envs", c.envs);
    c.horizon = p.get("horizon", c.horizon);
    c.value_coef = p.get("value_coef", c.value_coef);
    c.entropy_coef = p.get("entropy_coef", c.entropy_coef);
    c.max_grad_norm = p.get("max_grad_norm", c.max_grad_norm);
    c.reward_scale = p.get("reward_scale", c.reward_scale);
    c.initial_log_std = p.get("initial_log_std", c.initial_log_std);
    p.finish();
    try {
      c.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("train.ppo: ") + e.what());
    }
  }
  if (f.has("bc")) {
    Fields b(f.at("bc"), "train.bc");
    t.bc.epochs = b.get("epochs", t.bc.epochs);
    t.bc.minibatch = b.get("minibatch", t.bc.minibatch);
    t.bc.learning_rate = b.get("learning_rate", t.bc.learning_rate);
    t.bc.discrete_weight = b.get("discrete_weight", t.bc.discrete_weight);
    b.finish();
    if (t.bc.epochs < 0 || t.bc.minibatch < 1) throw ConfigError("train.bc: epochs >= 0 and minibatch >= 1");
    check_positive(t.bc.learning_rate, "train.bc.learning_rate");
  }
  t.expert_episodes = f.get("expert_episodes", t.expert_episodes);
  t.expert.watch_seconds = f.get("watch_seconds", t.expert.watch_seconds);
  f.finish();
  if (t.steps < 0) throw ConfigError("train.steps must be >= 0");
  if (t.candidates < 1) throw ConfigError("train.candidates must be >= 1");
  if (!(t.keep_fraction > 0.0 && t.keep_fraction <= 1.0)) throw ConfigError("train.keep_fraction must be in (0, 1]");
  if (t.eval_episodes < 1) throw ConfigError("train.eval_episodes must be >= 1");
  if (t.expert_episodes < 1) throw ConfigError("train.expert_episodes must be >= 1");
}

double default_duration(const ScenarioConfig& c) {
  switch (c.kind) {
    case ScenarioKind::Theater: return 900.0;
    case ScenarioKind::Distortion: return c.distortion.timeline.total();
    case ScenarioKind::Bubbles: return 60.0;
    case ScenarioKind::Rollout:
    case ScenarioKind::Train: return agents::EnvConfig{}.episode_seconds;
  }
  return 0.0;
}

bool valid_name(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
  });
}

}  // namespace

std::string to_string(ScenarioKind k) { return enum_name(k, kScenarioNames); }
std::string to_string(WalkerKind k) { return enum_name(k, kWalkerNames); }
std::string to_string(AidKind k) { return enum_name(k, kAidNames); }

std::filesystem::path ScenarioConfig::resolve(const std::string& ref) const {
  const std::filesystem::path p(ref);
  return p.is_absolute() ? p : base_dir / p;
}

agents::EnvConfig ScenarioConfig::env_config() const {
  agents::EnvConfig e;
  e.dt = dt;
  e.episode_seconds = duration;
  return e;
}

ScenarioConfig parse_config(const json& j, const std::filesystem::path& base_dir, bool check_files) {
  Fields f(j, "config");
  ScenarioConfig c;
  c.base_dir = base_dir;
  c.version = f.required<int>("version");
  if (c.version != kConfigVersion) {
    throw ConfigError("unsupported config version " + std::to_string(c.version) + " (expected " +
                      std::to_string(kConfigVersion) + ")");
  }
  c.name = f.required<std::string>("name");
  if (!valid_name(c.name)) throw ConfigError("name must be a non-empty run of [A-Za-z0-9._-]");
  c.kind = enum_from(f.required<std::string>("kind"), kScenarioNames, "config.kind");
  c.seed = f.required<std::uint64_t>("seed");
  c.dt = f.required<double>("dt");
  check_positive(c.dt, "dt");

  auto section = [&](const char* key, ScenarioKind owner) -> const json* {
    if (!f.has(key)) return nullptr;
    if (c.kind != owner) throw ConfigError(std::string("field '") + key + "' is not valid for " + to_string(c.kind));
    return &f.at(key);
  };
  if (const json* s = section("distortion", ScenarioKind::Distortion)) parse_distortion(*s, c.distortion);
  if (c.kind == ScenarioKind::Distortion && !f.has("distortion")) throw ConfigError("missing field 'distortion'");
  if (const json* s = section("bubbles", ScenarioKind::Bubbles)) parse_bubbles(*s, c.bubbles);
  if (const json* s = section("rollout", ScenarioKind::Rollout)) parse_rollout(*s, c.rollout);
  if (const json* s = section("train", ScenarioKind::Train)) parse_train(*s, c.train);
  if (f.has("scene") || f.has("cue_sheet")) {
    if (c.kind != ScenarioKind::Theater) throw ConfigError("scene and cue_sheet are only valid for Theater");
    c.scene = f.get<std::string>("scene", "");
    c.cue_sheet = f.get<std::string>("cue_sheet", "");
  }

  c.duration = f.get("duration", default_duration(c));
  check_positive(c.duration, "duration");
  if (c.kind == ScenarioKind::Distortion && c.duration > c.distortion.timeline.total() + 1e-9) {
    throw ConfigError("duration exceeds the treatment timeline");
  }

  if (f.has("walker")) {
    if (c.kind == ScenarioKind::Train) throw ConfigError("Train scenarios take no walker");
    c.walker = parse_walker(f.at("walker"));
  } else if (c.kind == ScenarioKind::Rollout) {
    c.walker.kind = WalkerKind::Policy;
  } else if (c.kind != ScenarioKind::Train) {
    throw ConfigError("missing field 'walker'");
  }
  f.finish();

  const WalkerKind wk = c.walker.kind;
  switch (c.kind) {
    case ScenarioKind::Theater:
      if (wk == WalkerKind::Policy) throw ConfigError("Policy walkers run in Rollout scenarios");
      break;
    case ScenarioKind::Distortion:
    case ScenarioKind::Bubbles:
      if (wk != WalkerKind::Waypoint && wk != WalkerKind::Wander) {
        throw ConfigError(to_string(c.kind) + " scenarios take Waypoint or Wander walkers");
      }
      break;
    case ScenarioKind::Rollout:
      if (wk != WalkerKind::Policy) throw ConfigError("Rollout scenarios take a Policy walker");
      if (c.walker.checkpoint.empty() && c.rollout.mode != agents::ActionMode::Random) {
        throw ConfigError("rollout without a checkpoint needs mode Random");
      }
      break;
    case ScenarioKind::Train: break;
  }

  if (check_files) {
    if (!c.scene.empty() && !std::filesystem::is_regular_file(c.resolve(c.scene))) {
      throw SceneLoadError("scene file not found: " + c.resolve(c.scene).string());
    }
    if (!c.cue_sheet.empty() && !std::filesystem::is_regular_file(c.resolve(c.cue_sheet))) {
      throw ConfigError("cue sheet not found: " + c.resolve(c.cue_sheet).string());
    }
    if (!c.walker.checkpoint.empty() && !std::filesystem::is_regular_file(c.resolve(c.walker.checkpoint))) {
      throw ConfigError("checkpoint not found: " + c.resolve(c.walker.checkpoint).string());
    }
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path(), true);
}

json config_to_json(const ScenarioConfig& c) {
  json j = {{"version", c.version}, {"name", c.name},         {"kind", to_string(c.kind)},
            {"seed", c.seed},       {"dt", c.dt},             {"duration", c.duration}};
  if (c.kind == ScenarioKind::Theater) {
    if (!c.scene.empty()) j["scene"] = c.scene;
    if (!c.cue_sheet.empty()) j["cue_sheet"] = c.cue_sheet;
  }
  if (c.kind != ScenarioKind::Train) {
    const auto& w = c.walker;
    json wj = {{"kind", to_string(w.kind)},       {"speed", w.speed},
               {"heading", w.heading},            {"head_height", w.head_height},
               {"body_radius", w.body_radius},    {"turn_noise_deg", w.turn_noise_deg},
               {"max_turn_deg", w.max_turn_deg},  {"aid", to_string(w.aid)}};
    if (w.start) wj["start"] = {w.start->x(), w.start->y()};
    if (!w.points.empty()) {
      json pts = json::array();
      for (const auto& p : w.points) pts.push_back({{"at", {p.position.x(), p.position.y()}}, {"dwell", p.dwell}});
      wj["points"] = pts;
    }
    if (!w.checkpoint.empty()) wj["checkpoint"] = w.checkpoint;
    j["walker"] = wj;
  }
  switch (c.kind) {
    case ScenarioKind::Distortion: {
      const auto& d = c.distortion;
      j["distortion"] = {
          {"treatment", distortion::treatment_to_json(d.treatment)},
          {"timeline", distortion::timeline_to_json(d.timeline)},
          {"room",
           {{"width", d.room.width},
            {"length", d.room.length},
            {"height", d.room.height},
            {"tile", d.room.tile},
            {"reference_volume", d.room.reference_volume}}},
          {"density", {{"before_end", d.density.before_end}, {"after_end", d.density.after_end}}},
          {"particles",
           {{"radius", d.particles.radius},
            {"speed", d.particles.speed},
            {"density", d.particles.density},
            {"redirect_mean", d.particles.redirect_mean}}},
          {"participants", d.participants}};
      break;
    }
    case ScenarioKind::Bubbles: {
      const auto& b = c.bubbles;
      j["bubbles"] = {{"side", b.space.side},
                      {"center", {b.space.center.x(), b.space.center.y()}},
                      {"diameter", b.bubbles.diameter},
                      {"speed", b.bubbles.speed},
                      {"altitude", b.bubbles.altitude},
                      {"reaim_mean", b.bubbles.reaim_mean},
                      {"participants", b.participants}};
      break;
    }
    case ScenarioKind::Rollout:
      j["rollout"] = {{"episodes", c.rollout.episodes},
                      {"agents", c.rollout.agents},
                      {"mode", enum_name(c.rollout.mode, kModeNames)}};
      break;
    case ScenarioKind::Train: {
      const auto& t = c.train;
      const auto& p = t.ppo;
      j["train"] = {{"method", enum_name(t.method, kMethodNames)},
                    {"steps", t.steps},
                    {"candidates", t.candidates},
                    {"keep_fraction", t.keep_fraction},
                    {"eval_episodes", t.eval_episodes},
                    {"expert_episodes", t.expert_episodes},
                    {"watch_seconds", t.expert.watch_seconds},
                    {"ppo",
                     {{"gamma", p.gamma},
                      {"lambda", p.lambda},
                      {"clip", p.clip},
                      {"learning_rate", p.learning_rate},
                      {"minibatch", p.minibatch},
                      {"epochs", p.epochs},
                      {"envs", p.envs},
                      {"horizon", p.horizon},
                      {"value_coef", p.value_coef},
                      {"entropy_coef", p.entropy_coef},
                      {"max_grad_norm", p.max_grad_norm},
                      {"reward_scale", p.reward_scale},
                      {"initial_log_std", p.initial_log_std}}},
                    {"bc",
                     {{"epochs", t.bc.epochs},
                      {"minibatch", t.bc.minibatch},
                      {"learning_rate", t.bc.learning_rate},
                      {"discrete_weight", t.bc.discrete_weight}}}};
      break;
    }
    case ScenarioKind::Theater: break;
  }
  return j;
}

}  // namespace artheater::harness
