#pragma once

// Semi-implicit Euler stepping and the two metric rollouts: the "actual"
// rollout computes penalty contact between the (static) hand surface points
// and the object SDF; the "prescribed" rollout applies optimization-owned
// wrenches directly.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "graspd/hand/model.hpp"
#include "graspd/sim/contact.hpp"
#include "graspd/sim/types.hpp"

namespace graspd::sim {

template <class T>
struct BodyState {
  Transform<T> pose;    // object-local -> world
  Twist<T> velocity;    // world frame, about the COM
  Vec3<T> com;          // world COM (kept alongside the pose)
};

template <class T>
BodyState<T> initial_body_state(const ObjectState& object, const Twistd& init_velocity) {
  BodyState<T> s;
  s.pose = to_transform<T>(object.pose);
  s.velocity = to_twist<T>(init_velocity);
  s.com = to_vec3<T>(object.pose.apply(object.com_local));
  return s;
}

// v <- v + dt M^-1 (f_c + f_e); pose advances with the *new* velocity, the
// orientation through the exponential map of dt*omega.
template <class T>
BodyState<T> euler_step(const BodyState<T>& state, double mass, const Mat3d& inertia_body,
                        const Wrench<T>& contact, const Wrench<T>& external, double dt) {
  BodyState<T> next;
  Vec3<T> force = contact.force + external.force;
  Vec3<T> torque = contact.torque + external.torque;

  next.velocity.lin = state.velocity.lin + force * (dt / mass);
  Mat3<T> R = state.pose.R;
  Mat3<T> inertia_world = R * to_mat3<T>(inertia_body) * R.transposed();
  next.velocity.ang = state.velocity.ang + inertia_world.inverse() * torque * T(dt);

  next.com = state.com + next.velocity.lin * T(dt);
  Mat3<T> dR = quat_exp(next.velocity.ang * T(dt)).to_mat3();
  next.pose.R = dR * state.pose.R;
  // The object rotates about its COM; keep the local COM mapping fixed.
  Vec3<T> com_offset = state.pose.R.tmul(state.com - state.pose.p);  // com in local
  next.pose.p = next.com - next.pose.R * com_offset;
  return next;
}

inline void check_finite(double v, const char* what, int step) {
  if (!std::isfinite(v))
    throw NumericalError(std::string("simulation diverged (") + what + " not finite) at step " +
                             std::to_string(step),
                         step);
}

template <class T>
void check_state_finite(const BodyState<T>& s, int step) {
  check_finite(value_of(s.velocity.lin.x) + value_of(s.velocity.lin.y) +
                   value_of(s.velocity.lin.z),
               "linear velocity", step);
  check_finite(value_of(s.velocity.ang.x) + value_of(s.velocity.ang.y) +
                   value_of(s.velocity.ang.z),
               "angular velocity", step);
  check_finite(value_of(s.com.x) + value_of(s.com.y) + value_of(s.com.z), "position", step);
}

template <class T>
struct RolloutResult {
  Twist<T> final_velocity;
  Transform<T> final_pose;
  Vec3<T> final_com;
};

// Hand kept static; the object integrates under per-point penalty contact
// against its (pose-tracking) SDF plus an optional external wrench.
template <class T>
RolloutResult<T> rollout_actual(std::span<const Vec3<T>> hand_points,
                                const sdf::SdfGrid& grid, const ObjectState& object,
                                const Twistd& init_velocity, const ContactParams& params,
                                int steps, const Wrenchd& external = {}) {
  if (steps < 1) throw ValidationError("rollout_actual: steps must be >= 1");
  BodyState<T> state = initial_body_state<T>(object, init_velocity);
  Wrench<T> ext = to_wrench<T>(external);
  // Skip points that provably stay out of reach over the whole horizon
  // (value and leak-gradient of their force are exactly zero only when the
  // leak is off; with leak on, skipping would drop gradient, so don't).
  for (int t = 0; t < steps; ++t) {
    Wrench<T> total;
    for (const Vec3<T>& x : hand_points) {
      // Object surface velocity at the point; the hand is static.
      Vec3<T> v_rel = state.velocity.lin + cross(state.velocity.ang, x - state.com);
      ContactForce<T> cf = contact_force(x, v_rel, grid, params, state.pose);
      Vec3<T> f = cf.f_c();
      total.force += f;
      total.torque += cross(x - state.com, f);
    }
    state = euler_step(state, object.mass, object.inertia, total, ext, params.dt);
    check_state_finite(state, t);
  }
  return {state.velocity, state.pose, state.com};
}

template <class T>
RolloutResult<T> rollout_actual(const hand::HandModel& model, const Transform<T>& hand_base,
                                std::span<const T> joint_angles, const sdf::SdfGrid& grid,
                                const ObjectState& object, const Twistd& init_velocity,
                                const ContactParams& params, int steps,
                                const Wrenchd& external = {}) {
  auto fk = hand::forward_kinematics<T>(model, hand_base, joint_angles);
  return rollout_actual<T>(std::span<const Vec3<T>>(fk.points), grid, object, init_velocity,
                           params, steps, external);
}

// Contact forces replaced by prescribed wrenches about the object COM. The
// hand geometry plays no role here.
template <class T>
RolloutResult<T> rollout_prescribed(std::span<const Wrench<T>> prescribed,
                                    const ObjectState& object, const Twistd& init_velocity,
                                    double dt, int steps) {
  if (steps < 1) throw ValidationError("rollout_prescribed: steps must be >= 1");
  if (dt <= 0.0) throw ValidationError("rollout_prescribed: dt must be positive");
  BodyState<T> state = initial_body_state<T>(object, init_velocity);
  Wrench<T> total;
  for (const Wrench<T>& w : prescribed) total += w;
  for (int t = 0; t < steps; ++t) {
    state = euler_step(state, object.mass, object.inertia, total, Wrench<T>{}, dt);
    check_state_finite(state, t);
  }
  return {state.velocity, state.pose, state.com};
}

// --- mass properties from the SDF interior -------------------------------

struct MassProperties {
  double mass = 0.0;
  Vec3d com{0, 0, 0};          // object-local
  Mat3d inertia;               // about the COM, object-local axes
  double bounding_radius = 0.0;
  double volume = 0.0;         // m^3
};

// Voxel integration over {phi < 0} at the grid's cell resolution.
MassProperties mass_properties(const sdf::SdfGrid& grid, double density);

// ObjectState at the canonical pose (unrotated, untranslated) for this grid.
ObjectState make_object_state(const sdf::SdfGrid& grid, double density);

}  // namespace graspd::sim
