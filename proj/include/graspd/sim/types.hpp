#pragma once

#include "graspd/diff/rotation.hpp"
#include "graspd/errors.hpp"
#include "graspd/sdf/grid.hpp"

namespace graspd::sim {

// Spatial velocity, world frame, angular part about the body's COM.
template <class T>
struct Twist {
  Vec3<T> lin{T(0.0), T(0.0), T(0.0)};
  Vec3<T> ang{T(0.0), T(0.0), T(0.0)};

  Twist operator+(const Twist& o) const { return {lin + o.lin, ang + o.ang}; }
};

using Twistd = Twist<double>;

template <class T>
struct Wrench {
  Vec3<T> force{T(0.0), T(0.0), T(0.0)};
  Vec3<T> torque{T(0.0), T(0.0), T(0.0)};

  Wrench operator+(const Wrench& o) const { return {force + o.force, torque + o.torque}; }
  Wrench& operator+=(const Wrench& o) {
    force += o.force;
    torque += o.torque;
    return *this;
  }
};

using Wrenchd = Wrench<double>;

template <class T>
Twist<T> to_twist(const Twistd& t) {
  return {to_vec3<T>(t.lin), to_vec3<T>(t.ang)};
}
template <class T>
Wrench<T> to_wrench(const Wrenchd& w) {
  return {to_vec3<T>(w.force), to_vec3<T>(w.torque)};
}

// ‖u‖ over mixed units: the angular part is weighted by a characteristic
// length so m/s and rad/s combine into one speed.
template <class T>
T weighted_speed(const Twist<T>& u, double characteristic_length) {
  return sqrt(squared_norm(u.lin) +
              squared_norm(u.ang) * (characteristic_length * characteristic_length));
}

// Rigid object being grasped. Pose maps object-local (= SDF grid) coordinates
// to world; velocity/inertia are about the COM.
struct ObjectState {
  Transformd pose;
  Twistd velocity;
  double mass = 1.0;                      // kg
  Mat3d inertia = Mat3d::identity();      // body frame, about COM, kg m^2
  Vec3d com_local{0, 0, 0};               // COM in object-local coordinates
  double bounding_radius = 1.0;           // of the surface about the COM, meters

  Vec3d com_world() const { return pose.apply(com_local); }

  void validate() const {
    if (!(mass > 0.0)) throw ValidationError("ObjectState: mass must be positive");
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if (std::abs(inertia(i, j) - inertia(j, i)) > 1e-12 * std::abs(inertia(i, i)))
          throw ValidationError("ObjectState: inertia must be symmetric");
    if (!(inertia(0, 0) > 0.0 && inertia(1, 1) > 0.0 && inertia(2, 2) > 0.0) ||
        inertia.det() <= 0.0)
      throw ValidationError("ObjectState: inertia must be positive definite");
  }
};

struct ContactParams {
  double k_n = 1e6;   // normal stiffness, N/m
  double k_f = 1e8;   // frictional stiffness
  double mu = 0.8;    // friction coefficient
  double alpha = 0.1; // gradient leak factor in [0, 1]
  double dt = 1e-5;   // seconds
  sdf::LevelSetOffset offset{0.0};

  void validate() const {
    if (k_n < 0.0 || k_f < 0.0 || mu < 0.0 || dt <= 0.0)
      throw ValidationError("ContactParams: stiffnesses/mu must be >= 0 and dt > 0");
    if (alpha < 0.0 || alpha > 1.0)
      throw ValidationError("ContactParams: alpha must lie in [0, 1]");
  }
};

template <class T>
struct ContactForce {
  Vec3<T> point{T(0.0), T(0.0), T(0.0)};
  Vec3<T> f_n{T(0.0), T(0.0), T(0.0)};
  Vec3<T> f_t{T(0.0), T(0.0), T(0.0)};

  Vec3<T> f_c() const { return f_n + f_t; }
};

using ContactForced = ContactForce<double>;

}  // namespace graspd::sim
