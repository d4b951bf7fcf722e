#pragma once

// Closed-form signed distances for sphere / box / capsule, templated on the
// scalar. These serve as test oracles for the grid machinery and as the
// per-link collision shapes of the hand.

#include <string>

#include "graspd/diff/rotation.hpp"
#include "graspd/errors.hpp"

namespace graspd::sdf {

enum class PrimitiveKind { kSphere, kBox, kCapsule };

// Geometry is expressed in the primitive's local frame: the sphere sits at
// `center`; the capsule spans `a`..`b` with the given radius; the box is
// axis-aligned around `center` with half extents `half`.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kSphere;
  Vec3d center{0, 0, 0};
  Vec3d a{0, 0, 0}, b{0, 0, 0};
  Vec3d half{0, 0, 0};
  double radius = 0.0;

  static Primitive sphere(const Vec3d& center, double radius) {
    if (radius <= 0.0) throw ValidationError("sphere radius must be positive");
    Primitive p;
    p.kind = PrimitiveKind::kSphere;
    p.center = center;
    p.radius = radius;
    return p;
  }

  static Primitive capsule(const Vec3d& a, const Vec3d& b, double radius) {
    if (radius <= 0.0) throw ValidationError("capsule radius must be positive");
    Primitive p;
    p.kind = PrimitiveKind::kCapsule;
    p.a = a;
    p.b = b;
    p.radius = radius;
    return p;
  }

  static Primitive box(const Vec3d& center, const Vec3d& half_extents) {
    if (half_extents.x <= 0.0 || half_extents.y <= 0.0 || half_extents.z <= 0.0)
      throw ValidationError("box half extents must be positive");
    Primitive p;
    p.kind = PrimitiveKind::kBox;
    p.center = center;
    p.half = half_extents;
    return p;
  }

  // Conservative bounding-sphere (center, radius) for separation culling.
  Vec3d bound_center() const {
    if (kind == PrimitiveKind::kCapsule) return (a + b) * 0.5;
    return center;
  }
  double bound_radius() const {
    switch (kind) {
      case PrimitiveKind::kSphere: return radius;
      case PrimitiveKind::kCapsule: return norm(b - a) * 0.5 + radius;
      case PrimitiveKind::kBox: return norm(half);
    }
    return 0.0;
  }
};

namespace detail {

template <class T>
T sphere_phi(const Primitive& p, const Vec3<T>& x) {
  return norm(x - to_vec3<T>(p.center)) - p.radius;
}

template <class T>
Vec3<T> sphere_grad(const Primitive& p, const Vec3<T>& x) {
  return normalized_or_zero(x - to_vec3<T>(p.center));
}

template <class T>
T capsule_phi(const Primitive& p, const Vec3<T>& x) {
  Vec3<T> pa = x - to_vec3<T>(p.a);
  Vec3d ab_d = p.b - p.a;
  Vec3<T> ab = to_vec3<T>(ab_d);
  T t = clamp(dot(pa, ab) / squared_norm(ab_d), 0.0, 1.0);
  return norm(pa - ab * t) - p.radius;
}

template <class T>
Vec3<T> capsule_grad(const Primitive& p, const Vec3<T>& x) {
  Vec3<T> pa = x - to_vec3<T>(p.a);
  Vec3d ab_d = p.b - p.a;
  Vec3<T> ab = to_vec3<T>(ab_d);
  T t = clamp(dot(pa, ab) / squared_norm(ab_d), 0.0, 1.0);
  return normalized_or_zero(pa - ab * t);
}

template <class T>
T box_phi(const Primitive& p, const Vec3<T>& x) {
  Vec3<T> d{abs(x.x - T(p.center.x)) - T(p.half.x),
            abs(x.y - T(p.center.y)) - T(p.half.y),
            abs(x.z - T(p.center.z)) - T(p.half.z)};
  Vec3<T> outside{max(d.x, T(0.0)), max(d.y, T(0.0)), max(d.z, T(0.0))};
  T inside = min(max(d.x, max(d.y, d.z)), T(0.0));
  return norm(outside) + inside;
}

template <class T>
Vec3<T> box_grad(const Primitive& p, const Vec3<T>& x) {
  Vec3<T> r = x - to_vec3<T>(p.center);
  Vec3<T> d{abs(r.x) - T(p.half.x), abs(r.y) - T(p.half.y), abs(r.z) - T(p.half.z)};
  const double dx = value_of(d.x), dy = value_of(d.y), dz = value_of(d.z);
  if (dx <= 0.0 && dy <= 0.0 && dz <= 0.0) {
    // Interior: steepest ascent is toward the nearest face.
    Vec3<T> g{T(0.0), T(0.0), T(0.0)};
    if (dx >= dy && dx >= dz)
      g.x = value_of(r.x) >= 0.0 ? T(1.0) : T(-1.0);
    else if (dy >= dz)
      g.y = value_of(r.y) >= 0.0 ? T(1.0) : T(-1.0);
    else
      g.z = value_of(r.z) >= 0.0 ? T(1.0) : T(-1.0);
    return g;
  }
  Vec3<T> outside{max(d.x, T(0.0)), max(d.y, T(0.0)), max(d.z, T(0.0))};
  Vec3<T> dir = normalized_or_zero(outside);
  auto sign_of = [](const T& s) { return value_of(s) >= 0.0 ? 1.0 : -1.0; };
  return {dir.x * T(sign_of(r.x)), dir.y * T(sign_of(r.y)), dir.z * T(sign_of(r.z))};
}

}  // namespace detail

template <class T>
T primitive_phi(const Primitive& p, const Vec3<T>& x_local) {
  switch (p.kind) {
    case PrimitiveKind::kSphere: return detail::sphere_phi(p, x_local);
    case PrimitiveKind::kCapsule: return detail::capsule_phi(p, x_local);
    case PrimitiveKind::kBox: return detail::box_phi(p, x_local);
  }
  return T(0.0);
}

template <class T>
Vec3<T> primitive_grad(const Primitive& p, const Vec3<T>& x_local) {
  switch (p.kind) {
    case PrimitiveKind::kSphere: return detail::sphere_grad(p, x_local);
    case PrimitiveKind::kCapsule: return detail::capsule_grad(p, x_local);
    case PrimitiveKind::kBox: return detail::box_grad(p, x_local);
  }
  return Vec3<T>{T(0.0), T(0.0), T(0.0)};
}

// A posed analytic shape with the same query surface as the grid: handy as an
// exact oracle where the grid would only be approximate.
struct AnalyticSdf {
  Primitive shape;
  Transformd pose;  // local -> world

  template <class T>
  T query(const Vec3<T>& x_world) const {
    return primitive_phi(shape, to_transform<T>(pose).inv_apply(x_world));
  }

  template <class T>
  Vec3<T> grad(const Vec3<T>& x_world) const {
    auto tf = to_transform<T>(pose);
    return tf.apply_vector(primitive_grad(shape, tf.inv_apply(x_world)));
  }
};

}  // namespace graspd::sdf
