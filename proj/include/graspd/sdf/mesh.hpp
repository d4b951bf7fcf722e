#pragma once

#include <array>
#include <string>
#include <vector>

#include "graspd/diff/vec.hpp"

namespace graspd::sdf {

struct TriMesh {
  std::vector<Vec3d> vertices;
  std::vector<std::array<int, 3>> faces;

  void bounding_box(Vec3d& mn, Vec3d& mx) const;
};

// ASCII OBJ, vertices and triangular faces only ("v" and "f" records;
// "f a/b/c" index forms accepted, extra attributes ignored).
TriMesh load_obj(const std::string& path);

// Optional named groups: groups[i] = (group name, first face index).
void save_obj(const std::string& path, const TriMesh& mesh,
              const std::vector<std::pair<std::string, std::size_t>>& groups = {});

TriMesh make_icosphere(double radius, int subdivisions);
TriMesh make_box_mesh(const Vec3d& half_extents);

}  // namespace graspd::sdf
