#pragma once

// Discretized signed-distance field on a regular node grid with trilinear
// interpolation inside the bounds and a clamp-plus-distance extension outside.
// Queries are templated on the scalar type so they can run on the tape.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "graspd/diff/rotation.hpp"
#include "graspd/errors.hpp"

namespace graspd::sdf {

struct LevelSetOffset {
  double r = 0.0;  // meters, >= 0; r = 0 is the true surface

  explicit LevelSetOffset(double radius = 0.0) : r(radius) {
    if (radius < 0.0) throw ValidationError("level-set offset must be nonnegative");
  }
};

class SdfGrid {
 public:
  SdfGrid() = default;
  SdfGrid(std::array<std::int32_t, 3> dims, const Vec3d& bounds_min,
          const Vec3d& bounds_max, std::vector<double> values)
      : dims_(dims), bmin_(bounds_min), bmax_(bounds_max), values_(std::move(values)) {
    validate();
  }

  const std::array<std::int32_t, 3>& dims() const { return dims_; }
  const Vec3d& bounds_min() const { return bmin_; }
  const Vec3d& bounds_max() const { return bmax_; }
  const std::vector<double>& values() const { return values_; }
  const Transformd& pose() const { return pose_; }
  void set_pose(const Transformd& pose) { pose_ = pose; }

  Vec3d spacing() const {
    return {(bmax_.x - bmin_.x) / (dims_[0] - 1), (bmax_.y - bmin_.y) / (dims_[1] - 1),
            (bmax_.z - bmin_.z) / (dims_[2] - 1)};
  }
  double max_spacing() const {
    Vec3d h = spacing();
    return std::max(h.x, std::max(h.y, h.z));
  }
  double diagonal() const { return norm(bmax_ - bmin_); }

  // x-fastest storage.
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
  }
  double at(int i, int j, int k) const { return values_[index(i, j, k)]; }

  Vec3d node_position(int i, int j, int k) const {
    Vec3d h = spacing();
    return {bmin_.x + h.x * i, bmin_.y + h.y * j, bmin_.z + h.z * k};
  }

  void validate() const {
    for (int a = 0; a < 3; ++a)
      if (dims_[a] < 2) throw ValidationError("SdfGrid: dims must be at least 2 per axis");
    if (!(bmin_.x < bmax_.x && bmin_.y < bmax_.y && bmin_.z < bmax_.z))
      throw ValidationError("SdfGrid: bounds_min must be strictly below bounds_max");
    const std::size_t expected = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    if (values_.size() != expected)
      throw ValidationError("SdfGrid: value count does not match dims");
    const double cap = diagonal();
    for (double v : values_) {
      if (!std::isfinite(v)) throw ValidationError("SdfGrid: non-finite value");
      if (std::abs(v) > cap)
        throw ValidationError("SdfGrid: |phi| exceeds the grid diagonal");
    }
  }

 private:
  std::array<std::int32_t, 3> dims_{2, 2, 2};
  Vec3d bmin_{0, 0, 0}, bmax_{1, 1, 1};
  std::vector<double> values_{0, 0, 0, 0, 0, 0, 0, 0};
  Transformd pose_;  // object-local -> world
};

namespace detail {

// Containing cell along one axis, ties broken toward the lower cell so the
// one-sided derivative at a face comes from the lower-index cell.
inline int containing_cell(double u, int cells) {
  int c = static_cast<int>(std::ceil(u)) - 1;
  if (c < 0) c = 0;
  if (c > cells - 1) c = cells - 1;
  return c;
}

template <class T>
struct CellCoords {
  int ci, cj, ck;
  T fx, fy, fz;  // in-cell fractions
};

template <class T>
CellCoords<T> locate(const SdfGrid& grid, const Vec3<T>& local) {
  Vec3d h = grid.spacing();
  const Vec3d& bmin = grid.bounds_min();
  T ux = (local.x - bmin.x) / h.x;
  T uy = (local.y - bmin.y) / h.y;
  T uz = (local.z - bmin.z) / h.z;
  CellCoords<T> c;
  c.ci = containing_cell(value_of(ux), grid.dims()[0] - 1);
  c.cj = containing_cell(value_of(uy), grid.dims()[1] - 1);
  c.ck = containing_cell(value_of(uz), grid.dims()[2] - 1);
  c.fx = ux - double(c.ci);
  c.fy = uy - double(c.cj);
  c.fz = uz - double(c.ck);
  return c;
}

template <class T>
T interpolate(const SdfGrid& grid, const CellCoords<T>& c) {
  double v000 = grid.at(c.ci, c.cj, c.ck);
  double v100 = grid.at(c.ci + 1, c.cj, c.ck);
  double v010 = grid.at(c.ci, c.cj + 1, c.ck);
  double v110 = grid.at(c.ci + 1, c.cj + 1, c.ck);
  double v001 = grid.at(c.ci, c.cj, c.ck + 1);
  double v101 = grid.at(c.ci + 1, c.cj, c.ck + 1);
  double v011 = grid.at(c.ci, c.cj + 1, c.ck + 1);
  double v111 = grid.at(c.ci + 1, c.cj + 1, c.ck + 1);
  // Nested lerps; corner values are constants on the tape.
  T v00 = T(v000) + c.fx * (v100 - v000);
  T v10 = T(v010) + c.fx * (v110 - v010);
  T v01 = T(v001) + c.fx * (v101 - v001);
  T v11 = T(v011) + c.fx * (v111 - v011);
  T v0 = v00 + c.fy * (v10 - v00);
  T v1 = v01 + c.fy * (v11 - v01);
  return v0 + c.fz * (v1 - v0);
}

// Analytic gradient of the trilinear interpolant, in local coordinates.
template <class T>
Vec3<T> interpolant_gradient(const SdfGrid& grid, const CellCoords<T>& c) {
  double v000 = grid.at(c.ci, c.cj, c.ck);
  double v100 = grid.at(c.ci + 1, c.cj, c.ck);
  double v010 = grid.at(c.ci, c.cj + 1, c.ck);
  double v110 = grid.at(c.ci + 1, c.cj + 1, c.ck);
  double v001 = grid.at(c.ci, c.cj, c.ck + 1);
  double v101 = grid.at(c.ci + 1, c.cj, c.ck + 1);
  double v011 = grid.at(c.ci, c.cj + 1, c.ck + 1);
  double v111 = grid.at(c.ci + 1, c.cj + 1, c.ck + 1);
  Vec3d h = grid.spacing();

  // d/dx is bilinear in (fy, fz), and cyclically for the other axes.
  auto bilerp = [](double a00, double a10, double a01, double a11, const T& s,
                   const T& t) {
    T a0 = T(a00) + s * (a10 - a00);
    T a1 = T(a01) + s * (a11 - a01);
    return a0 + t * (a1 - a0);
  };
  T gx = bilerp(v100 - v000, v110 - v010, v101 - v001, v111 - v011, c.fy, c.fz) / h.x;
  T gy = bilerp(v010 - v000, v110 - v100, v011 - v001, v111 - v101, c.fx, c.fz) / h.y;
  T gz = bilerp(v001 - v000, v101 - v100, v011 - v010, v111 - v110, c.fx, c.fy) / h.z;
  return {gx, gy, gz};
}

template <class T>
Vec3<T> clamp_to_bounds(const SdfGrid& grid, const Vec3<T>& local) {
  const Vec3d& mn = grid.bounds_min();
  const Vec3d& mx = grid.bounds_max();
  return {clamp(local.x, mn.x, mx.x), clamp(local.y, mn.y, mx.y),
          clamp(local.z, mn.z, mx.z)};
}

template <class T>
bool inside_bounds(const SdfGrid& grid, const Vec3<T>& local) {
  const Vec3d& mn = grid.bounds_min();
  const Vec3d& mx = grid.bounds_max();
  return value_of(local.x) >= mn.x && value_of(local.x) <= mx.x &&
         value_of(local.y) >= mn.y && value_of(local.y) <= mx.y &&
         value_of(local.z) >= mn.z && value_of(local.z) <= mx.z;
}

}  // namespace detail

// phi at a world point, with an explicit object pose (differentiable through
// both the point and the pose when they carry Vars).
template <class T>
T query(const SdfGrid& grid, const Vec3<T>& x_world, const Transform<T>& object_pose) {
  Vec3<T> local = object_pose.inv_apply(x_world);
  if (detail::inside_bounds(grid, local))
    return detail::interpolate(grid, detail::locate(grid, local));
  Vec3<T> clamped = detail::clamp_to_bounds(grid, local);
  T inner = detail::interpolate(grid, detail::locate(grid, clamped));
  return inner + norm(local - clamped);
}

template <class T>
T query(const SdfGrid& grid, const Vec3<T>& x_world) {
  return query(grid, x_world, to_transform<T>(grid.pose()));
}

// Exact gradient of the interpolant inside (not normalized; see the contact
// chain rule), outward unit direction from the clamp point outside.
template <class T>
Vec3<T> grad(const SdfGrid& grid, const Vec3<T>& x_world, const Transform<T>& object_pose) {
  Vec3<T> local = object_pose.inv_apply(x_world);
  if (detail::inside_bounds(grid, local)) {
    Vec3<T> g = detail::interpolant_gradient(grid, detail::locate(grid, local));
    return object_pose.apply_vector(g);
  }
  Vec3<T> clamped = detail::clamp_to_bounds(grid, local);
  Vec3<T> delta = local - clamped;
  T dist = norm(delta);
  if (value_of(dist) > 1e-9) return object_pose.apply_vector(delta / dist);
  Vec3<T> g = detail::interpolant_gradient(grid, detail::locate(grid, clamped));
  return object_pose.apply_vector(g);
}

template <class T>
Vec3<T> grad(const SdfGrid& grid, const Vec3<T>& x_world) {
  return grad(grid, x_world, to_transform<T>(grid.pose()));
}

template <class T>
struct PhiGrad {
  T phi;
  Vec3<T> grad;
};

// Fused query + grad with identical semantics to the two separate calls;
// saves the duplicate cell lookup on the contact hot path.
template <class T>
PhiGrad<T> query_with_grad(const SdfGrid& grid, const Vec3<T>& x_world,
                           const Transform<T>& object_pose) {
  Vec3<T> local = object_pose.inv_apply(x_world);
  if (detail::inside_bounds(grid, local)) {
    auto cell = detail::locate(grid, local);
    return {detail::interpolate(grid, cell),
            object_pose.apply_vector(detail::interpolant_gradient(grid, cell))};
  }
  Vec3<T> clamped = detail::clamp_to_bounds(grid, local);
  auto cell = detail::locate(grid, clamped);
  Vec3<T> delta = local - clamped;
  T dist = norm(delta);
  T phi = detail::interpolate(grid, cell) + dist;
  if (value_of(dist) > 1e-9)
    return {phi, object_pose.apply_vector(delta / dist)};
  return {phi, object_pose.apply_vector(detail::interpolant_gradient(grid, cell))};
}

// Signed distance to the radius-r level set; the smoothed-and-padded surface
// is a plain subtraction so the schedule can move r for free.
template <class T>
T effective_distance(const SdfGrid& grid, const Vec3<T>& x_world,
                     const LevelSetOffset& offset, const Transform<T>& object_pose) {
  return query(grid, x_world, object_pose) - offset.r;
}

template <class T>
T effective_distance(const SdfGrid& grid, const Vec3<T>& x_world,
                     const LevelSetOffset& offset) {
  return query(grid, x_world) - offset.r;
}

// Fills a grid by sampling an arbitrary signed-distance functor at the nodes
// (test oracle path; meshes go through bake()).
inline SdfGrid sample_grid(const std::function<double(const Vec3d&)>& phi,
                           std::array<std::int32_t, 3> dims, const Vec3d& bounds_min,
                           const Vec3d& bounds_max) {
  std::vector<double> values(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  Vec3d h{(bounds_max.x - bounds_min.x) / (dims[0] - 1),
          (bounds_max.y - bounds_min.y) / (dims[1] - 1),
          (bounds_max.z - bounds_min.z) / (dims[2] - 1)};
  std::size_t n = 0;
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i)
        values[n++] = phi(Vec3d{bounds_min.x + h.x * i, bounds_min.y + h.y * j,
                                bounds_min.z + h.z * k});
  return SdfGrid(dims, bounds_min, bounds_max, std::move(values));
}

}  // namespace graspd::sdf
