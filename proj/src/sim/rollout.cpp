#include "graspd/sim/rollout.hpp"

namespace graspd::sim {

MassProperties mass_properties(const sdf::SdfGrid& grid, double density) {
  if (density <= 0.0) throw ValidationError("mass_properties: density must be positive");
  const auto& dims = grid.dims();
  Vec3d h = grid.spacing();
  const double cell_volume = h.x * h.y * h.z;

  // First pass: volume and centroid over cell centers with phi < 0.
  double volume = 0.0;
  Vec3d centroid{0, 0, 0};
  std::size_t cells = 0;
  for (int k = 0; k + 1 < dims[2]; ++k) {
    for (int j = 0; j + 1 < dims[1]; ++j) {
      for (int i = 0; i + 1 < dims[0]; ++i) {
        // Average of the 8 corners = trilinear value at the cell center.
        double phi = 0.0;
        for (int c = 0; c < 8; ++c)
          phi += grid.at(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
        phi *= 0.125;
        if (phi >= 0.0) continue;
        Vec3d center = grid.node_position(i, j, k) + h * 0.5;
        centroid += center;
        volume += cell_volume;
        ++cells;
      }
    }
  }
  if (cells == 0)
    throw ValidationError("mass_properties: SDF has no interior (no phi < 0 cells)");
  centroid = centroid / static_cast<double>(cells);

  // Second pass: inertia about the centroid and the bounding radius.
  Mat3d inertia{};
  double bounding_radius = 0.0;
  const double cell_mass = density * cell_volume;
  for (int k = 0; k + 1 < dims[2]; ++k) {
    for (int j = 0; j + 1 < dims[1]; ++j) {
      for (int i = 0; i + 1 < dims[0]; ++i) {
        double phi = 0.0;
        for (int c = 0; c < 8; ++c)
          phi += grid.at(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
        phi *= 0.125;
        if (phi >= 0.0) continue;
        Vec3d r = grid.node_position(i, j, k) + h * 0.5 - centroid;
        double r2 = squared_norm(r);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            inertia(a, b) += cell_mass * ((a == b ? r2 : 0.0) - r[a] * r[b]);
        bounding_radius = std::max(bounding_radius, std::sqrt(r2));
      }
    }
  }
  bounding_radius += 0.5 * norm(h);  // cell-center sampling slack

  MassProperties props;
  props.mass = density * volume;
  props.com = centroid;
  props.inertia = inertia;
  props.bounding_radius = bounding_radius;
  props.volume = volume;
  return props;
}

ObjectState make_object_state(const sdf::SdfGrid& grid, double density) {
  MassProperties props = mass_properties(grid, density);
  ObjectState state;
  state.pose = grid.pose();
  state.mass = props.mass;
  state.inertia = props.inertia;
  state.com_local = props.com;
  state.bounding_radius = props.bounding_radius;
  state.validate();
  return state;
}

}  // namespace graspd::sim
