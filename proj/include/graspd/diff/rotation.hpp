#pragma once

#include "graspd/diff/vec.hpp"

namespace graspd {

// Unit quaternion (w, x, y, z).
template <class T>
struct Quat {
  T w{}, x{}, y{}, z{};

  Quat() : w(T(1.0)), x(T(0.0)), y(T(0.0)), z(T(0.0)) {}
  Quat(T ww, T xx, T yy, T zz)
      : w(std::move(ww)), x(std::move(xx)), y(std::move(yy)), z(std::move(zz)) {}

  static Quat identity() { return Quat(); }

  Quat operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }

  Quat conjugate() const { return {w, -x, -y, -z}; }

  T squared_norm() const { return w * w + x * x + y * y + z * z; }

  Quat normalized() const {
    T n = sqrt(squared_norm());
    return {w / n, x / n, y / n, z / n};
  }

  Mat3<T> to_mat3() const {
    Mat3<T> r;
    const T two(2.0);
    r(0, 0) = T(1.0) - two * (y * y + z * z);
    r(0, 1) = two * (x * y - w * z);
    r(0, 2) = two * (x * z + w * y);
    r(1, 0) = two * (x * y + w * z);
    r(1, 1) = T(1.0) - two * (x * x + z * z);
    r(1, 2) = two * (y * z - w * x);
    r(2, 0) = two * (x * z - w * y);
    r(2, 1) = two * (y * z + w * x);
    r(2, 2) = T(1.0) - two * (x * x + y * y);
    return r;
  }

  Vec3<T> rotate(const Vec3<T>& v) const {
    // v + 2 q_v × (q_v × v + w v)
    Vec3<T> qv{x, y, z};
    Vec3<T> t = cross(qv, cross(qv, v) + v * w);
    return v + t * T(2.0);
  }
};

using Quatd = Quat<double>;

// exp of a rotation vector (axis * angle). The Taylor branch keeps it
// differentiable through zero.
template <class T>
Quat<T> quat_exp(const Vec3<T>& r) {
  T half(0.5);
  T theta2 = squared_norm(r) * half * half;
  double t2 = value_of(theta2);
  T c, k;
  if (t2 < 1e-16) {
    c = T(1.0) - theta2 * T(0.5);
    k = half * (T(1.0) - theta2 / T(6.0));
  } else {
    T theta = sqrt(theta2);
    c = cos(theta);
    k = sin(theta) / theta * half;
  }
  return Quat<T>{c, r.x * k, r.y * k, r.z * k};
}

inline Quatd quat_from_axis_angle(const Vec3d& axis, double angle) {
  return quat_exp(axis * angle);
}

template <class T>
Quat<T> to_quat(const Quatd& q) {
  return {T(q.w), T(q.x), T(q.y), T(q.z)};
}

inline Quatd value_of(const Quat<Var>& q) { return {q.w.v, q.x.v, q.y.v, q.z.v}; }
inline Quatd value_of(const Quatd& q) { return q; }

// Rigid transform stored as rotation matrix + translation; matrices keep the
// many-point FK path cheap on tape.
template <class T>
struct Transform {
  Mat3<T> R = Mat3<T>::identity();
  Vec3<T> p{T(0.0), T(0.0), T(0.0)};

  static Transform identity() { return Transform{}; }

  Vec3<T> apply(const Vec3<T>& x) const { return R * x + p; }
  Vec3<T> apply_vector(const Vec3<T>& v) const { return R * v; }
  Vec3<T> inv_apply(const Vec3<T>& x) const { return R.tmul(x - p); }
  Vec3<T> inv_apply_vector(const Vec3<T>& v) const { return R.tmul(v); }

  Transform operator*(const Transform& o) const {
    return {R * o.R, R * o.p + p};
  }

  Transform inverse() const {
    Transform r;
    r.R = R.transposed();
    r.p = -(r.R * p);
    return r;
  }
};

using Transformd = Transform<double>;

template <class T>
Transform<T> to_transform(const Transformd& t) {
  return {to_mat3<T>(t.R), to_vec3<T>(t.p)};
}

inline Transformd make_transform(const Quatd& q, const Vec3d& p) {
  return {q.to_mat3(), p};
}

// Basis completion: returns any two unit vectors orthogonal to n (unit).
inline void orthonormal_basis(const Vec3d& n, Vec3d& t1, Vec3d& t2) {
  // Duff et al. branchless frame construction.
  const double sign = n.z >= 0.0 ? 1.0 : -1.0;
  const double a = -1.0 / (sign + n.z);
  const double b = n.x * n.y * a;
  t1 = {1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x};
  t2 = {b, sign + n.y * n.y * a, -n.y};
}

}  // namespace graspd
