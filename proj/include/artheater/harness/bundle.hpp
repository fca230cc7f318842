#pragma once

#include <artheater/harness/config.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace artheater::harness {

/// A file of a bundle, path relative to the bundle directory.
struct Artifact {
  std::string path;
  std::string content;
};

std::string sha256_hex(std::string_view data);

/// `out/<name>/<label>`; the label defaults to a UTC timestamp.
std::filesystem::path bundle_directory(const std::filesystem::path& out_root, const std::string& name,
                                       const std::string& label);
std::string timestamp_label();

/// Writes the artifacts and `manifest.json` listing each one with its size
/// and SHA-256. The manifest also carries the normalized config.
void write_bundle(const std::filesystem::path& dir, const ScenarioConfig& config,
                  const std::vector<Artifact>& artifacts);
/// Same, for bundles that do not come from a scenario. `header` needs at
/// least "scenario", "kind" and "config".
void write_bundle(const std::filesystem::path& dir, nlohmann::json header, const std::vector<Artifact>& artifacts);

/// Writes more artifacts into an existing bundle and lists them in the
/// manifest, replacing entries with the same path.
void append_to_bundle(const std::filesystem::path& dir, const std::vector<Artifact>& artifacts);

/// Throws IncompleteBundle without a readable manifest.
nlohmann::json read_manifest(const std::filesystem::path& dir);

/// Problems found re-hashing every listed file; empty when the bundle is
/// intact.
std::vector<std::string> verify_bundle(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace artheater::harness
