#pragma once

// Shared fixtures for the test suites.

#include <cmath>
#include <string>

#include "graspd/hand/model.hpp"
#include "graspd/sdf/grid.hpp"

namespace graspd::testsupport {

inline const std::string kAssetDir = GRASPD_ASSET_DIR;
inline const std::string kToolPath = GRASPD_TOOL_PATH;

inline sdf::SdfGrid sphere_grid(double radius = 0.03, int n = 64, double pad = 0.01) {
  double e = radius + pad;
  return sdf::sample_grid([radius](const Vec3d& p) { return norm(p) - radius; }, {n, n, n},
                          {-e, -e, -e}, {e, e, e});
}

// True when every hand point is strictly on one side of the contact boundary
// and every force-carrying point sits well inside its interpolation cell, so
// central differences with step h see a smooth function. `surface_margin`
// keeps points off the min(phi,0) kink; `cell_margin` (in cells) keeps the FD
// window away from the interpolant's face discontinuities.
inline bool smooth_contact_config(const sdf::SdfGrid& grid,
                                  const std::vector<Vec3d>& points,
                                  double surface_margin = 5e-4,
                                  double cell_margin = 0.02) {
  const Vec3d h = grid.spacing();
  const Vec3d& mn = grid.bounds_min();
  for (const Vec3d& p : points) {
    double d = sdf::query(grid, p);
    if (std::abs(d) < surface_margin) return false;
    if (d >= 0.0) continue;
    for (int a = 0; a < 3; ++a) {
      double u = (p[a] - mn[a]) / h[a];
      double frac = u - std::floor(u);
      if (frac < cell_margin || frac > 1.0 - cell_margin) return false;
    }
  }
  return true;
}

}  // namespace graspd::testsupport
