#pragma once

#include <artheater/geometry/twin.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace artheater::geometry {

ARTHEATER_DEFINE_ERROR(ObjParseError);

/// Canonical Wavefront OBJ: one comment header line, all `v` records (six
/// decimals) in mesh creation order, then all `f` records with 1-based
/// global indices. Nothing else is emitted.
std::string export_obj(const std::vector<ExtrudedMesh>& meshes);

/// Reads `v`/`f` records back as a single mesh. Comments and blank lines are
/// skipped; any other record is rejected.
ExtrudedMesh parse_obj(std::string_view text);

}  // namespace artheater::geometry
