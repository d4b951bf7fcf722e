#pragma once

#include "graspd/sdf/grid.hpp"
#include "graspd/sdf/mesh.hpp"

namespace graspd::sdf {

// Triangulates the phi = iso level set of the grid (marching tetrahedra over
// the node lattice, vertices deduplicated per lattice edge). Returns an empty
// mesh when the iso level is never crossed.
TriMesh extract_level_set(const SdfGrid& grid, double iso = 0.0);

}  // namespace graspd::sdf
