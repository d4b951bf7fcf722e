#pragma once

// Small fixed-size linear algebra, templated on the scalar so every kernel
// works both on plain doubles and on tape Vars.

#include "graspd/diff/tape.hpp"

namespace graspd {

template <class T>
struct Vec3 {
  T x{}, y{}, z{};

  Vec3() = default;
  Vec3(T xx, T yy, T zz) : x(std::move(xx)), y(std::move(yy)), z(std::move(zz)) {}

  T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(const T& s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(const T& s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

  friend Vec3 operator*(const T& s, const Vec3& v) { return v * s; }
};

using Vec3d = Vec3<double>;

template <class T>
T dot(const Vec3<T>& a, const Vec3<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class T>
T squared_norm(const Vec3<T>& v) { return dot(v, v); }

// sqrt carries the derivative-0-at-0 rule for Var, so norm is NaN-free.
template <class T>
T norm(const Vec3<T>& v) { return sqrt(squared_norm(v)); }

// Zero vector when the norm is below eps; callers rely on this for v̂_t.
template <class T>
Vec3<T> normalized_or_zero(const Vec3<T>& v, double eps = 1e-9) {
  T n = norm(v);
  if (value_of(n) < eps) return Vec3<T>{T(0.0), T(0.0), T(0.0)};
  return v / n;
}

template <class T>
Vec3<T> to_vec3(const Vec3d& v) {
  return {T(v.x), T(v.y), T(v.z)};
}

inline Vec3d value_of(const Vec3<Var>& v) {
  return {v.x.v, v.y.v, v.z.v};
}
inline Vec3d value_of(const Vec3d& v) { return v; }

// Row-major 3x3.
template <class T>
struct Mat3 {
  T m[9]{};

  static Mat3 identity() {
    Mat3 r;
    r.m[0] = T(1.0); r.m[4] = T(1.0); r.m[8] = T(1.0);
    return r;
  }

  T& operator()(int r, int c) { return m[3 * r + c]; }
  const T& operator()(int r, int c) const { return m[3 * r + c]; }

  Vec3<T> operator*(const Vec3<T>& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) + (*this)(i, 2) * o(2, j);
    return r;
  }

  Mat3 operator*(const T& s) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] * s;
    return r;
  }

  Mat3 operator+(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
    return r;
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  // Transpose-multiply without materializing the transpose.
  Vec3<T> tmul(const Vec3<T>& v) const {
    return {m[0] * v.x + m[3] * v.y + m[6] * v.z,
            m[1] * v.x + m[4] * v.y + m[7] * v.z,
            m[2] * v.x + m[5] * v.y + m[8] * v.z};
  }

  T det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  Mat3 inverse() const {
    Mat3 adj;
    adj(0, 0) = m[4] * m[8] - m[5] * m[7];
    adj(0, 1) = m[2] * m[7] - m[1] * m[8];
    adj(0, 2) = m[1] * m[5] - m[2] * m[4];
    adj(1, 0) = m[5] * m[6] - m[3] * m[8];
    adj(1, 1) = m[0] * m[8] - m[2] * m[6];
    adj(1, 2) = m[2] * m[3] - m[0] * m[5];
    adj(2, 0) = m[3] * m[7] - m[4] * m[6];
    adj(2, 1) = m[1] * m[6] - m[0] * m[7];
    adj(2, 2) = m[0] * m[4] - m[1] * m[3];
    T inv_det = T(1.0) / det();
    return adj * inv_det;
  }
};

using Mat3d = Mat3<double>;

template <class T>
Mat3<T> to_mat3(const Mat3d& a) {
  Mat3<T> r;
  for (int i = 0; i < 9; ++i) r.m[i] = T(a.m[i]);
  return r;
}

template <class T>
Mat3<T> outer(const Vec3<T>& a, const Vec3<T>& b) {
  Mat3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = a[i] * b[j];
  return r;
}

}  // namespace graspd
