#include <artheater/harness/bundle.hpp>

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>

namespace artheater::harness {

namespace {

constexpr const char* kManifest = "manifest.json";

nlohmann::json entry(const Artifact& a) {
  return {{"path", a.path}, {"bytes", a.content.size()}, {"sha256", sha256_hex(a.content)}};
}

void check_path(const std::string& rel) {
  const std::filesystem::path p(rel);
  if (rel.empty() || p.is_absolute() || rel == kManifest) throw IncompleteBundle("bad artifact path '" + rel + "'");
  for (const auto& part : p) {
    if (part == "..") throw IncompleteBundle("artifact path escapes the bundle: " + rel);
  }
}

void write_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest) {
  write_file(dir / kManifest, manifest.dump(2) + "\n");
}

void store(const std::filesystem::path& dir, const std::vector<Artifact>& artifacts) {
  for (const auto& a : artifacts) {
    check_path(a.path);
    write_file(dir / a.path, a.content);
  }
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string timestamp_label() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::filesystem::path bundle_directory(const std::filesystem::path& out_root, const std::string& name,
                                       const std::string& label) {
  const std::string l = label.empty() ? timestamp_label() : label;
  if (l.find('/') != std::string::npos || l == "." || l == "..") throw ConfigError("bad label '" + l + "'");
  return out_root / name / l;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_bundle(const std::filesystem::path& dir, const ScenarioConfig& config,
                  const std::vector<Artifact>& artifacts) {
  write_bundle(dir,
               {{"scenario", config.name}, {"kind", to_string(config.kind)}, {"seed", config.seed},
                {"config", config_to_json(config)}},
               artifacts);
}

void write_bundle(const std::filesystem::path& dir, nlohmann::json header, const std::vector<Artifact>& artifacts) {
  std::filesystem::create_directories(dir);
  store(dir, artifacts);
  std::vector<const Artifact*> sorted;
  for (const auto& a : artifacts) sorted.push_back(&a);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->path < b->path; });
  nlohmann::json files = nlohmann::json::array();
  for (const auto* a : sorted) files.push_back(entry(*a));
  header["format"] = "artheater-bundle";
  header["version"] = 1;
  header["files"] = files;
  write_manifest(dir, header);
}

nlohmann::json read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifest;
  if (!std::filesystem::is_regular_file(path)) throw IncompleteBundle("no manifest.json in " + dir.string());
  try {
    auto m = nlohmann::json::parse(read_file(path));
    if (m.value("format", "") != "artheater-bundle" || !m.contains("files") || !m.contains("config")) {
      throw IncompleteBundle("manifest.json in " + dir.string() + " is not a bundle manifest");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IncompleteBundle("manifest.json: " + std::string(e.what()));
  }
}

void append_to_bundle(const std::filesystem::path& dir, const std::vector<Artifact>& artifacts) {
  auto manifest = read_manifest(dir);
  store(dir, artifacts);
  std::map<std::string, nlohmann::json> files;
  for (const auto& f : manifest["files"]) files[f.at("path").get<std::string>()] = f;
  for (const auto& a : artifacts) files[a.path] = entry(a);
  manifest["files"] = nlohmann::json::array();
  for (auto& [path, f] : files) manifest["files"].push_back(f);
  write_manifest(dir, manifest);
}

std::vector<std::string> verify_bundle(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir);
  std::vector<std::string> problems;
  for (const auto& f : manifest["files"]) {
    const std::string rel = f.at("path").get<std::string>();
    const auto path = dir / rel;
    if (!std::filesystem::is_regular_file(path)) {
      problems.push_back(rel + ": missing");
      continue;
    }
    const std::string content = read_file(path);
    if (content.size() != f.at("bytes").get<std::size_t>()) {
      problems.push_back(fmt::format("{}: size {} != {}", rel, content.size(), f.at("bytes").get<std::size_t>()));
    } else if (sha256_hex(content) != f.at("sha256").get<std::string>()) {
      problems.push_back(rel + ": hash mismatch");
    }
  }
  return problems;
}

}  // namespace artheater::harness
