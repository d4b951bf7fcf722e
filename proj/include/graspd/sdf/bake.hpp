#pragma once

#include <array>
#include <cstdint>

#include "graspd/sdf/grid.hpp"
#include "graspd/sdf/mesh.hpp"

namespace graspd::sdf {

struct BakeOptions {
  std::array<std::int32_t, 3> dims{256, 256, 256};
  double padding = 0.01;  // meters added around the mesh bounding box
  // Fraction of nodes whose three ray parities may disagree (grazing hits)
  // before the mesh is declared non-watertight.
  double max_parity_disagreement = 1e-3;
  int threads = 0;  // 0 = hardware concurrency
};

// Unsigned distance from an AABB-tree closest-triangle query; sign from
// ray-crossing parity along three fixed directions, majority vote.
// Throws ValidationError (listing offending nodes) when parity disagreement
// exceeds the tolerance, i.e. the mesh is not watertight.
SdfGrid bake(const TriMesh& mesh, const BakeOptions& options);

}  // namespace graspd::sdf
