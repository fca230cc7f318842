#pragma once

#include <artheater/harness/bundle.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace artheater::harness {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the line
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

std::string svg_line_plot(const PlotSpec& plot);

struct Report {
  nlohmann::json summary;
  std::vector<Artifact> files;  // report.json, plots/*.svg, density/*.pgm
};

/// Recomputes the report of a bundle from its raw files. Throws
/// IncompleteBundle when the manifest is missing or a listed file is missing
/// or altered.
Report build_report(const std::filesystem::path& bundle_dir);

/// build_report() and adds the files to the bundle and its manifest.
nlohmann::json emit_report(const std::filesystem::path& bundle_dir);

}  // namespace artheater::harness
