#include <artheater/harness/report.hpp>

#include <artheater/agents/env.hpp>
#include <artheater/bubbles/orchestra.hpp>
#include <artheater/geometry/obj.hpp>
#include <artheater/harness/config.hpp>
#include <artheater/harness/records.hpp>
#include <artheater/harness/scenario.hpp>
#include <artheater/stage/engine.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>

namespace artheater::harness {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::vector<std::string> listed_files(const json& manifest, const std::string& prefix, const std::string& suffix) {
  std::vector<std::string> out;
  for (const auto& f : manifest["files"]) {
    const auto p = f.at("path").get<std::string>();
    if (p.rfind(prefix, 0) == 0 && p.size() >= suffix.size() && p.compare(p.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string stem(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto name = path.substr(slash == std::string::npos ? 0 : slash + 1);
  return name.substr(0, name.find('.'));
}

std::vector<stage::TimedPosition> positions(const std::vector<TraceRecord>& trace) {
  std::vector<stage::TimedPosition> out;
  for (const auto& r : trace) out.push_back({r.t, {r.x, r.y}});
  return out;
}

double walked(const std::vector<TraceRecord>& trace) {
  double d = 0.0;
  for (std::size_t i = 1; i < trace.size(); ++i) d += std::hypot(trace[i].x - trace[i - 1].x, trace[i].y - trace[i - 1].y);
  return d;
}

void theater_report(const std::filesystem::path& dir, Report& r) {
  const auto trace = trace_from_csv(read_file(dir / "trace.csv"));
  const auto events = stage::events_from_jsonl(read_file(dir / "events.jsonl"));
  const auto sheet = stage::cue_sheet_from_json(json::parse(read_file(dir / "cue_sheet.json")));
  const auto timing = stage::stage_timing_report(events, positions(trace));

  std::size_t zones = 0, started = 0;
  for (const auto& st : sheet.stages) zones += st.zones.size();
  json all_zones = nullptr;
  std::map<std::string, int> counts;
  for (const auto& e : events) {
    ++counts[stage::to_string(e.kind)];
    if (e.kind == stage::EventKind::ClipStarted && ++started == zones) all_zones = e.time;
  }
  r.summary["event_counts"] = counts;
  r.summary["stage_durations"] = timing.durations;
  r.summary["stage_distances"] = timing.distances;
  r.summary["total_distance"] = timing.total_distance;
  r.summary["visit_order"] = timing.visit_order;
  r.summary["all_zones_time"] = all_zones;
  r.summary["duration"] = trace.empty() ? 0.0 : trace.back().t;

  PlotSeries s{"walker", {}, {}};
  for (const auto& row : trace) {
    s.x.push_back(row.t);
    s.y.push_back(row.nearest_target_distance.value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  r.files.push_back({"plots/target_distance.svg",
                     svg_line_plot({"Distance to guidance target", "time (s)", "distance (m)", {s}})});
}

void distortion_report(const std::filesystem::path& dir, const json& manifest, const ScenarioConfig& config,
                       Report& r) {
  const auto& d = config.distortion;
  std::vector<LocomotionTrace> traces;
  json participants = json::array();
  const auto windows = distortion::stimulus_windows(d.timeline);
  std::vector<PlotSeries> axis(windows.size()), center(windows.size());
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const std::string name = fmt::format("{} {}", distortion::to_string(windows[w].phase), windows[w].segment);
    axis[w].name = center[w].name = name;
  }

  for (const auto& path : listed_files(manifest, "traces/", ".csv")) {
    const auto records = trace_from_csv(read_file(dir / path));
    const auto trace = to_locomotion(records);
    traces.push_back(trace);
    const auto m = covered_metrics(trace, d.room, d.timeline);
    json segs = json::array();
    for (const auto& s : m.segments) {
      segs.push_back({{"segment", s.window.segment},
                      {"phase", distortion::to_string(s.window.phase)},
                      {"t0", s.window.t0},
                      {"t1", s.window.t1},
                      {"axis_movement", s.axis_displacement},
                      {"center_distance_change", s.center_change}});
    }
    participants.push_back({{"id", stem(path)}, {"segments", segs}, {"total_walking_distance", m.total_walking_distance}});
  }

  // Series: displacement from each window's start, averaged over participants.
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    for (double t = win.t0; t <= win.t1 + 1e-9; t += std::max(config.dt, (win.t1 - win.t0) / 200.0)) {
      double a = 0.0, c = 0.0;
      int n = 0;
      for (const auto& tr : traces) {
        if (tr.samples.size() < 2 || t > tr.end() + 1e-9 || win.t0 < tr.start() - 1e-9) continue;
        const Vec2 p0 = position_at(tr, win.t0), p1 = position_at(tr, t);
        a += (p1 - p0).dot(d.room.short_axis());
        c += (p1 - d.room.center()).norm() - (p0 - d.room.center()).norm();
        ++n;
      }
      if (n == 0) continue;
      axis[w].x.push_back(t - win.t0);
      axis[w].y.push_back(a / n);
      center[w].x.push_back(t - win.t0);
      center[w].y.push_back(c / n);
    }
  }
  r.summary["participants"] = participants;
  r.summary["treatment"] = distortion::to_string(d.treatment.kind);
  r.files.push_back({"plots/axis_movement.svg",
                     svg_line_plot({"Axis movement per segment", "time in segment (s)", "displacement (m)", axis})});
  r.files.push_back({"plots/center_distance.svg", svg_line_plot({"Distance-to-center change per segment",
                                                                 "time in segment (s)", "change (m)", center})});

  json maps = json::array();
  const auto dwin = distortion::density_windows(d.timeline, d.density);
  for (std::size_t w = 0; w < dwin.size(); ++w) {
    const auto map = distortion::density_map(traces, d.room, {dwin[w]});
    const std::string path = fmt::format("density/window_{:02}.pgm", w);
    r.files.push_back({path, distortion::density_to_pgm(map)});
    auto meta = distortion::density_metadata(map);
    meta["file"] = path;
    maps.push_back(meta);
  }
  const auto all = distortion::density_map(traces, d.room, dwin);
  r.files.push_back({"density/all_windows.pgm", distortion::density_to_pgm(all)});
  auto meta = distortion::density_metadata(all);
  meta["file"] = "density/all_windows.pgm";
  maps.push_back(meta);
  r.summary["density_maps"] = maps;
}

void bubbles_report(const std::filesystem::path& dir, const json& manifest, Report& r) {
  json participants = json::array();
  std::vector<PlotSeries> series;
  for (const auto& path : listed_files(manifest, "traces/", ".csv")) {
    const std::string id = stem(path);
    const auto trace = trace_from_csv(read_file(dir / path));
    const auto notes = bubbles::notes_from_jsonl(read_file(dir / ("notes/" + id + ".jsonl")));
    std::map<std::string, int> per_chord;
    std::map<int, double> opened;
    double held = 0.0;
    PlotSeries s{id, {0.0}, {0.0}};
    int ons = 0;
    for (const auto& n : notes) {
      if (n.kind == bubbles::NoteKind::On) {
        ++per_chord[n.chord];
        opened[n.bubble] = n.time;
        s.x.push_back(n.time);
        s.y.push_back(++ons);
      } else if (opened.count(n.bubble)) {
        held += n.time - opened[n.bubble];
        opened.erase(n.bubble);
      }
    }
    const double end = trace.empty() ? 0.0 : trace.back().t;
    for (const auto& [b, t0] : opened) held += end - t0;
    s.x.push_back(end);
    s.y.push_back(ons);
    series.push_back(s);
    participants.push_back({{"id", id},
                            {"note_ons", ons},
                            {"notes_per_chord", per_chord},
                            {"seconds_inside_bubbles", held},
                            {"total_walking_distance", walked(trace)}});
  }
  r.summary["participants"] = participants;
  r.files.push_back({"plots/note_ons.svg", svg_line_plot({"Cumulative note-ons", "time (s)", "notes", series})});
}

void rollout_report(const std::filesystem::path& dir, const json& manifest, const ScenarioConfig& config, Report& r) {
  const auto env = config.env_config();
  const auto stored = json::parse(read_file(dir / "summary.json"));
  std::map<std::string, double> env_reward;
  for (const auto& e : stored.at("episodes")) env_reward[e.at("id").get<std::string>()] = e.at("reward").get<double>();

  json episodes = json::array();
  PlotSeries env_series{"environment", {}, {}}, oracle_series{"trace oracle", {}, {}};
  double total = 0.0, total_zones = 0.0;
  int k = 0;
  for (const auto& path : listed_files(manifest, "episodes/", ".csv")) {
    const std::string id = stem(path);
    const auto records = trace_from_csv(read_file(dir / path));
    const auto trace = to_locomotion(records);
    const auto events = stage::events_from_jsonl(read_file(dir / ("episodes/" + id + ".events.jsonl")));
    const double oracle = trace.samples.empty()
                              ? 0.0
                              : agents::episode_reward_oracle(trace, env.layout, env.reward, env.agent_radius);
    const auto zones = std::count_if(events.begin(), events.end(),
                                     [](const auto& e) { return e.kind == stage::EventKind::ClipStarted; });
    const double reported = env_reward.count(id) ? env_reward[id] : std::numeric_limits<double>::quiet_NaN();
    episodes.push_back({{"id", id},
                        {"reward", reported},
                        {"oracle_reward", oracle},
                        {"zones_entered", zones},
                        {"walking_distance", walked(records)}});
    total += oracle;
    total_zones += static_cast<double>(zones);
    env_series.x.push_back(k);
    env_series.y.push_back(reported);
    oracle_series.x.push_back(k);
    oracle_series.y.push_back(oracle);
    ++k;
  }
  r.summary["episodes"] = episodes;
  r.summary["reward_total"] = total;
  r.summary["mean_reward"] = k ? total / k : 0.0;
  r.summary["mean_zones"] = k ? total_zones / k : 0.0;
  r.files.push_back(
      {"plots/rewards.svg", svg_line_plot({"Episode reward", "episode", "reward", {env_series, oracle_series}})});
}

void train_report(const std::filesystem::path& dir, const json& manifest, const ScenarioConfig& config, Report& r) {
  const auto selection = json::parse(read_file(dir / "selection.json"));
  std::vector<PlotSeries> series;
  const bool ppo = config.train.method == TrainMethod::Ppo;
  for (const auto& path : listed_files(manifest, "training/", ".csv")) {
    std::istringstream in(read_file(dir / path));
    std::string line;
    std::getline(in, line);
    PlotSeries s{stem(path), {}, {}};
    while (std::getline(in, line)) {
      std::vector<double> cells;
      std::istringstream row(line);
      for (std::string c; std::getline(row, c, ',');) cells.push_back(std::stod(c));
      if (cells.size() < 2) continue;
      s.x.push_back(ppo ? cells[1] : cells[0]);
      s.y.push_back(ppo ? cells[2] : cells[1]);
    }
    series.push_back(s);
  }
  r.summary["candidates"] = selection.at("candidates");
  r.summary["kept"] = std::count_if(selection.at("candidates").begin(), selection.at("candidates").end(),
                                    [](const json& c) { return c.at("kept").get<bool>(); });
  r.files.push_back({"plots/training.svg",
                     ppo ? svg_line_plot({"Training reward", "environment steps", "mean episode reward", series})
                         : svg_line_plot({"Behavior cloning loss", "epoch", "loss", series})});
}

}  // namespace

std::string svg_line_plot(const PlotSpec& plot) {
  constexpr double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      W, H, W, H);
  out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", (W - R + L) / 2,
                     xml_escape(plot.title));
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", L, T,
                     W - L - R, H - T - B);
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4, fy = y0 + (y1 - y0) * i / 4;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n", px(fx), H - B + 16, fx);
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.4g}</text>\n", L - 6, py(fy) + 4, fy);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (W - R + L) / 2, H - 12,
                     xml_escape(plot.x_label));
  out += fmt::format("<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
                     (H - B + T) / 2, (H - B + T) / 2, xml_escape(plot.y_label));

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kColors[k % kColors.size()];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
      }
      pts.clear();
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", px(s.x[i]), py(s.y[i]));
    }
    flush();
    const double ly = T + 14 + 18 * static_cast<double>(k);
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n", W - R + 10,
                       ly - 4, W - R + 30, ly - 4, color);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - R + 36, ly, xml_escape(s.name));
  }
  return out + "</svg>\n";
}

Report build_report(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir);
  for (const auto& problem : verify_bundle(dir)) throw IncompleteBundle(dir.string() + ": " + problem);
  if (manifest.value("kind", "") == "Trace") {
    Report r;
    try {
      const auto mesh = geometry::parse_obj(read_file(dir / "scene.obj"));
      r.summary = json::parse(read_file(dir / "summary.json"));
      r.summary["scenario"] = manifest.value("scenario", "");
      r.summary["kind"] = "Trace";
      r.summary["vertices"] = mesh.vertices.size();
      r.summary["faces"] = mesh.faces.size();
      r.summary["surface_area"] = geometry::mesh_surface_area(mesh);
    } catch (const std::exception& e) {
      throw IncompleteBundle(dir.string() + ": " + e.what());
    }
    r.files.push_back({"report.json", r.summary.dump(2) + "\n"});
    return r;
  }
  const auto config = parse_config(manifest.at("config"), dir, false);

  Report r;
  r.summary = {{"scenario", config.name}, {"kind", to_string(config.kind)}, {"seed", config.seed}};
  try {
    switch (config.kind) {
      case ScenarioKind::Theater: theater_report(dir, r); break;
      case ScenarioKind::Distortion: distortion_report(dir, manifest, config, r); break;
      case ScenarioKind::Bubbles: bubbles_report(dir, manifest, r); break;
      case ScenarioKind::Rollout: rollout_report(dir, manifest, config, r); break;
      case ScenarioKind::Train: train_report(dir, manifest, config, r); break;
    }
  } catch (const IncompleteBundle&) {
    throw;
  } catch (const std::exception& e) {
    throw IncompleteBundle(dir.string() + ": " + e.what());
  }
  r.files.insert(r.files.begin(), {"report.json", r.summary.dump(2) + "\n"});
  return r;
}

json emit_report(const std::filesystem::path& dir) {
  auto r = build_report(dir);
  append_to_bundle(dir, r.files);
  return r.summary;
}

}  // namespace artheater::harness
