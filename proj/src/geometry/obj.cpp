#include <artheater/geometry/obj.hpp>

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <sstream>

namespace artheater::geometry {

namespace {

// Values that print as zero are written without a sign so the text is stable.
double canonical(double v) { return std::abs(v) < 5e-7 ? 0.0 : v; }

}  // namespace

std::string export_obj(const std::vector<ExtrudedMesh>& meshes) {
  std::string out = "# artheater obj v1\n";
  for (const auto& m : meshes) {
    for (const auto& v : m.vertices) {
      out += fmt::format("v {:.6f} {:.6f} {:.6f}\n", canonical(v.x()), canonical(v.y()), canonical(v.z()));
    }
  }
  std::size_t base = 1;
  for (const auto& m : meshes) {
    for (const auto& f : m.faces) {
      out += fmt::format("f {} {} {}\n", base + f[0], base + f[1], base + f[2]);
    }
    base += m.vertices.size();
  }
  return out;
}

ExtrudedMesh parse_obj(std::string_view text) {
  ExtrudedMesh mesh;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ObjParseError(fmt::format("line {}: bad vertex", lineno));
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int& idx : f) {
        std::string tok;
        if (!(ls >> tok)) throw ObjParseError(fmt::format("line {}: face needs 3 indices", lineno));
        const auto slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        int v = 0;
        auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), v);
        if (ec != std::errc{} || v < 1) throw ObjParseError(fmt::format("line {}: bad index '{}'", lineno, tok));
        idx = v - 1;
      }
      std::string extra;
      if (ls >> extra) throw ObjParseError(fmt::format("line {}: only triangles are supported", lineno));
      mesh.faces.push_back(f);
    } else {
      throw ObjParseError(fmt::format("line {}: unsupported record '{}'", lineno, tag));
    }
  }
  for (const auto& f : mesh.faces) {
    for (int idx : f) {
      if (idx >= static_cast<int>(mesh.vertices.size())) throw ObjParseError("face index out of range");
    }
  }
  return mesh;
}

}  // namespace artheater::geometry
