#pragma once

#include <string>

#include "graspd/sdf/grid.hpp"

namespace graspd::sdf {

// GSDF binary format, little-endian:
//   magic "GSDF" | u32 version=1 | u32 dims[3] | f64 bounds[6] (min xyz, max xyz)
//   | f64 values[dims.x*dims.y*dims.z], x-fastest.
void write_gsdf(const std::string& path, const SdfGrid& grid);
SdfGrid read_gsdf(const std::string& path);

}  // namespace graspd::sdf
