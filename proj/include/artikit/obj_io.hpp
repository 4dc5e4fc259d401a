#pragma once

#include <iosfwd>
#include <string>

#include "artikit/voxel_grid.hpp"

namespace artikit {

// Wavefront OBJ, positions and faces only. Polygon faces are fan
// triangulated; normals/texcoords/materials are ignored.
TriMesh read_obj(std::istream& in, const std::string& name = "obj");
TriMesh read_obj_file(const std::string& path);

void write_obj(std::ostream& out, const TriMesh& mesh);
void write_obj_file(const std::string& path, const TriMesh& mesh);

}  // namespace artikit
