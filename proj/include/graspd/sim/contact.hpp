#pragma once

// Penalty contact with Coulomb friction:
//   f_n = k_n * min(phi - r, 0) * grad(phi)        (leak applied to the min)
//   f_t = -min(k_f |v_t|, mu |f_n|) * v_t / |v_t|  (zero below 1e-9 m/s)
// The force acts on the object; v_rel is the velocity of the object relative
// to the (static) hand at the contact point.

#include <span>

#include "graspd/sim/types.hpp"

namespace graspd::sim {

template <class T>
ContactForce<T> contact_force(const Vec3<T>& x_world, const Vec3<T>& v_rel,
                              const sdf::SdfGrid& grid, const ContactParams& params,
                              const Transform<T>& object_pose) {
  ContactForce<T> out;
  out.point = x_world;

  auto pg = sdf::query_with_grad(grid, x_world, object_pose);
  T depth = leaky_min_zero(pg.phi - params.offset.r, params.alpha);
  out.f_n = pg.grad * (depth * params.k_n);

  Vec3<T> n_hat = normalized_or_zero(pg.grad);
  Vec3<T> v_t = v_rel - n_hat * dot(v_rel, n_hat);
  T v_t_norm = norm(v_t);
  if (value_of(v_t_norm) >= 1e-9) {
    // |f_n| written as a product of the (leaky) depth, not as norm(f_n):
    // same value, but the leak keeps flowing when the depth clamps to zero,
    // so inactive contacts feel friction gradients too.
    T f_n_norm = -depth * params.k_n * norm(pg.grad);
    T magnitude = min(v_t_norm * params.k_f, f_n_norm * params.mu);
    out.f_t = v_t * (-magnitude / v_t_norm);
  }
  return out;
}

template <class T>
ContactForce<T> contact_force(const Vec3<T>& x_world, const Vec3<T>& v_rel,
                              const sdf::SdfGrid& grid, const ContactParams& params) {
  return contact_force(x_world, v_rel, grid, params, to_transform<T>(grid.pose()));
}

// Net force and torque about `com` (world).
template <class T>
Wrench<T> aggregate_wrench(std::span<const ContactForce<T>> forces, const Vec3<T>& com) {
  Wrench<T> total;
  for (const ContactForce<T>& cf : forces) {
    Vec3<T> f = cf.f_c();
    total.force += f;
    total.torque += cross(cf.point - com, f);
  }
  return total;
}

}  // namespace graspd::sim
