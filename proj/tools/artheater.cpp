// Command-line front end: trace, simulate, train, rollout, report, verify.
//
// Exit codes: 0 success, 1 other failure (including a failed verify),
// 2 config error, 3 scene error, 4 training divergence.

#include <artheater/agents/ppo.hpp>
#include <artheater/geometry/obj.hpp>
#include <artheater/harness/bundle.hpp>
#include <artheater/harness/report.hpp>
#include <artheater/harness/scenario.hpp>
#include <artheater/harness/tracing.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <optional>

using namespace artheater;
using namespace artheater::harness;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kScene = 3, kDivergence = 4 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string label;
  std::optional<long long> steps;
  std::optional<int> episodes;
  std::string bundle;
  bool no_report = false;
};

void note(const std::string& line) { fmt::print(stderr, "{}\n", line); }

ScenarioConfig configure(const Options& o, std::initializer_list<ScenarioKind> accepted, const char* command) {
  ScenarioConfig c = load_config(o.config);
  if (std::find(accepted.begin(), accepted.end(), c.kind) == accepted.end()) {
    throw ConfigError(fmt::format("'{}' does not run {} scenarios", command, to_string(c.kind)));
  }
  if (o.seed) c.seed = *o.seed;
  if (o.steps) {
    if (*o.steps < 0) throw ConfigError("--steps must be >= 0");
    c.train.steps = *o.steps;
  }
  if (o.episodes) {
    if (*o.episodes < 1) throw ConfigError("--episodes must be >= 1");
    c.rollout.episodes = *o.episodes;
  }
  return c;
}

int run(const ScenarioConfig& c, const Options& o) {
  const auto dir = run_scenario(c, o.out, o.label, note);
  if (!o.no_report) emit_report(dir);
  fmt::print("{}\n", dir.string());
  return kOk;
}

int cmd_trace(const Options& o) {
  const TraceJob job = load_trace_job(o.config);
  const auto files = run_trace_job(job);
  const auto dir = bundle_directory(o.out, job.name, o.label);
  write_bundle(dir, {{"scenario", job.name}, {"kind", "Trace"}, {"config", trace_job_to_json(job)}}, files);
  if (!o.no_report) emit_report(dir);
  fmt::print("{}\n", dir.string());
  return kOk;
}

int cmd_report(const Options& o) {
  const auto summary = emit_report(o.bundle);
  fmt::print("{}\n", summary.dump(2));
  return kOk;
}

int cmd_verify(const Options& o) {
  const auto problems = verify_bundle(o.bundle);
  const auto manifest = read_manifest(o.bundle);
  for (const auto& p : problems) fmt::print("FAIL {}\n", p);
  if (!problems.empty()) return kFailure;
  fmt::print("OK {} files\n", manifest["files"].size());
  return kOk;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const agents::TrainingConfigError*>(&e)) return kConfig;
  if (dynamic_cast<const SceneLoadError*>(&e) || dynamic_cast<const geometry::InvalidScene*>(&e) ||
      dynamic_cast<const geometry::DecodeError*>(&e) || dynamic_cast<const geometry::ObjParseError*>(&e)) {
    return kScene;
  }
  if (dynamic_cast<const agents::DivergenceDetected*>(&e)) return kDivergence;
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Walk-through theater simulator: digital twins, staged plays, distortions, bubbles and agents"};
  app.require_subcommand(1);
  Options o;

  auto scenario_flags = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Config JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output root; bundles go to <out>/<name>/<label>");
    sub->add_option("--label", o.label, "Run folder name (default: UTC timestamp)");
    sub->add_flag("--no-report", o.no_report, "Skip report.json and plots");
  };
  auto seeded = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Override the config seed"); };

  auto* trace = app.add_subcommand("trace", "Trace a floorplan into a scene (JSON + OBJ)");
  scenario_flags(trace);
  auto* simulate = app.add_subcommand("simulate", "Run a Theater, Distortion or Bubbles scenario");
  scenario_flags(simulate);
  seeded(simulate);
  auto* train = app.add_subcommand("train", "Train agent policies (PPO or behavior cloning)");
  scenario_flags(train);
  seeded(train);
  train->add_option("--steps", o.steps, "Environment steps per candidate");
  auto* rollout = app.add_subcommand("rollout", "Roll out a policy checkpoint in the corridor");
  scenario_flags(rollout);
  seeded(rollout);
  rollout->add_option("--episodes", o.episodes, "Episodes to run");
  auto* report = app.add_subcommand("report", "Recompute report.json and plots of a bundle");
  report->add_option("bundle", o.bundle, "Bundle directory")->required();
  auto* verify = app.add_subcommand("verify", "Re-check the content hashes of a bundle");
  verify->add_option("bundle", o.bundle, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*trace) return cmd_trace(o);
    if (*simulate) {
      return run(configure(o, {ScenarioKind::Theater, ScenarioKind::Distortion, ScenarioKind::Bubbles}, "simulate"), o);
    }
    if (*train) return run(configure(o, {ScenarioKind::Train}, "train"), o);
    if (*rollout) return run(configure(o, {ScenarioKind::Rollout}, "rollout"), o);
    if (*report) return cmd_report(o);
    if (*verify) return cmd_verify(o);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code(e);
  }
  return kFailure;
}
