#pragma once

// The relaxed grasp objective: a task loss on prescribed wrenches, a physics
// loss tying those wrenches to the contact forces the pose actually produces,
// joint-range/limit penalties, and a hand self-intersection penalty. All
// terms evaluate through one generic kernel so a single tape pass yields
// every gradient.

#include <cmath>
#include <span>
#include <vector>

#include "graspd/hand/model.hpp"
#include "graspd/sim/rollout.hpp"

namespace graspd::loss {

// One prescribed wrench per (rollout, surface point): the forces that stop
// rollout m live in rows m*P .. m*P+P-1. All start at zero.
struct GraspCandidate {
  hand::HandPose pose;
  std::vector<sim::Wrenchd> prescribed;

  static GraspCandidate zeros(const hand::HandModel& model, const hand::HandPose& pose,
                              std::size_t rollouts) {
    GraspCandidate c;
    c.pose = pose;
    c.prescribed.assign(rollouts * model.num_surface_points(), sim::Wrenchd{});
    return c;
  }
};

struct VelocitySet {
  std::vector<sim::Twistd> items;

  // (0,0,0), +(0.01,0.01,0.01), -(0.01,0.01,0.01) m/s linear, zero angular.
  static VelocitySet defaults() {
    VelocitySet v;
    v.items.resize(3);
    v.items[1].lin = {0.01, 0.01, 0.01};
    v.items[2].lin = {-0.01, -0.01, -0.01};
    return v;
  }
  std::size_t size() const { return items.size(); }
};

struct LossReport {
  double task = 0.0;
  double physics = 0.0;
  double qrange = 0.0;
  double qlimit = 0.0;
  double inter = 0.0;
  double lambda_task = 0.0;
  double lambda_limit = 0.0;

  bool finite() const {
    return std::isfinite(task) && std::isfinite(physics) && std::isfinite(qrange) &&
           std::isfinite(qlimit) && std::isfinite(inter);
  }
};

// Diagonal weighting between the force and torque rows of the physics
// residual (identity by default; N vs N·m are mixed knowingly).
struct PhysicsWeights {
  double force = 1.0;
  double torque = 1.0;
};

struct LossSettings {
  VelocitySet velocities = VelocitySet::defaults();
  int rollout_steps = 1;
  PhysicsWeights physics_weights;
  bool relaxation = true;  // off: task term becomes the direct simulation metric
};

// Per-link bounding spheres + the non-neighbor pair list; lets the
// self-intersection term skip pairs that are provably separated (their
// contribution is exactly zero in value and gradient under the exact min).
struct SelfIntersectionPlan {
  struct LinkBound {
    Vec3d center{0, 0, 0};
    double radius = 0.0;
    bool empty = true;
  };
  std::vector<std::pair<int, int>> pairs;
  std::vector<LinkBound> bounds;

  static SelfIntersectionPlan build(const hand::HandModel& model);
};

template <class T>
struct LossTerms {
  T task{0.0};
  T physics{0.0};
  T qrange{0.0};
  T qlimit{0.0};
  T inter{0.0};
};

// --- self-intersection ----------------------------------------------------

// Normal-term penalty (zero velocity, exact min) of every link's surface
// points against every non-neighbor link's primitive SDFs, both directions.
// Returns the sum of squared force components; the caller takes the sqrt.
template <class T>
T self_intersection_squared(const hand::HandModel& model, const SelfIntersectionPlan& plan,
                            const hand::FkResult<T>& fk, double k_n) {
  T total(0.0);
  auto side = [&](int point_link, int prim_link) {
    const hand::Link& src = model.links[point_link];
    const hand::Link& dst = model.links[prim_link];
    const Transform<T>& dst_world = fk.link_world[prim_link];
    Transform<T> world_to_dst = dst_world.inverse();
    // Surface points of `src` are already in fk.points; find their offset.
    std::size_t offset = 0;
    for (int l = 0; l < point_link; ++l)
      offset += model.links[l].surface_points.size();
    for (std::size_t p = 0; p < src.surface_points.size(); ++p) {
      Vec3<T> local = world_to_dst.apply(fk.points[offset + p]);
      for (const sdf::Primitive& prim : dst.primitives) {
        T phi = sdf::primitive_phi(prim, local);
        if (value_of(phi) >= 0.0) continue;  // exact min: no value, no gradient
        T depth = min(phi, T(0.0));
        Vec3<T> g = sdf::primitive_grad(prim, local);
        Vec3<T> f = g * (depth * k_n);
        total += squared_norm(f);
      }
    }
  };

  for (const auto& [a, b] : plan.pairs) {
    const auto& ba = plan.bounds[a];
    const auto& bb = plan.bounds[b];
    if (!ba.empty && !bb.empty) {
      Vec3d ca = value_of(fk.link_world[a].apply(to_vec3<T>(ba.center)));
      Vec3d cb = value_of(fk.link_world[b].apply(to_vec3<T>(bb.center)));
      if (norm(ca - cb) > ba.radius + bb.radius) continue;  // provably separated
    }
    side(a, b);
    side(b, a);
  }
  return total;
}

// --- the combined evaluation ------------------------------------------------

// Evaluates every loss term for a base transform, joint vector and prescribed
// wrenches. Instantiated with T = Var inside the optimizer (one tape, one
// backward) and with T = double by the finite-difference harnesses.
template <class T>
LossTerms<T> evaluate_losses(const hand::HandModel& model, const SelfIntersectionPlan& plan,
                             const sdf::SdfGrid& grid, const sim::ObjectState& object,
                             const sim::ContactParams& params, const LossSettings& settings,
                             const Transform<T>& base, std::span<const T> joints,
                             std::span<const sim::Wrench<T>> prescribed) {
  const std::size_t n_points = model.num_surface_points();
  const std::size_t n_rollouts = settings.velocities.size();
  if (n_rollouts == 0) throw ValidationError("evaluate_losses: empty velocity set");

  LossTerms<T> terms;
  terms.qrange = hand::qrange_loss(model, joints);
  terms.qlimit = hand::qlimit_loss(model, joints);

  auto fk = hand::forward_kinematics<T>(model, base, joints);
  terms.inter = sqrt(self_intersection_squared(model, plan, fk, params.k_n));

  if (settings.relaxation) {
    if (prescribed.size() != n_rollouts * n_points)
      throw ValidationError("evaluate_losses: prescribed wrench count mismatch");

    // Task: do the prescribed wrenches stop each perturbation?
    T task_sum(0.0);
    for (std::size_t m = 0; m < n_rollouts; ++m) {
      auto result = sim::rollout_prescribed<T>(
          prescribed.subspan(m * n_points, n_points), object,
          settings.velocities.items[m], params.dt, settings.rollout_steps);
      task_sum += sim::weighted_speed(result.final_velocity, object.bounding_radius);
    }
    terms.task = task_sum / double(n_rollouts);

    // Physics: does the pose actually provide them? Each rollout's actual
    // contact wrenches are measured at that rollout's initial velocity, the
    // exact state its stepping sees, so friction participates and a zero
    // residual means the prescribed and simulated trajectories coincide.
    Vec3<T> com = to_vec3<T>(object.pose.apply(object.com_local));
    Transform<T> object_pose = to_transform<T>(object.pose);
    T residual(0.0);
    const double wf = settings.physics_weights.force;
    const double wt = settings.physics_weights.torque;
    for (std::size_t i = 0; i < n_points; ++i) {
      for (std::size_t m = 0; m < n_rollouts; ++m) {
        const sim::Twistd& v0 = settings.velocities.items[m];
        Vec3<T> v_rel =
            to_vec3<T>(v0.lin) + cross(to_vec3<T>(v0.ang), fk.points[i] - com);
        sim::ContactForce<T> cf =
            sim::contact_force(fk.points[i], v_rel, grid, params, object_pose);
        Vec3<T> f = cf.f_c();
        Vec3<T> tau = cross(fk.points[i] - com, f);
        const sim::Wrench<T>& fd = prescribed[m * n_points + i];
        residual += squared_norm(f - fd.force) * wf;
        residual += squared_norm(tau - fd.torque) * wt;
      }
    }
    terms.physics = sqrt(residual);
  } else {
    // Ablation: the direct simulation metric on true contact dynamics.
    T task_sum(0.0);
    for (std::size_t m = 0; m < n_rollouts; ++m) {
      auto result = sim::rollout_actual<T>(std::span<const Vec3<T>>(fk.points), grid, object,
                                           settings.velocities.items[m], params,
                                           settings.rollout_steps);
      task_sum += sim::weighted_speed(result.final_velocity, object.bounding_radius);
    }
    terms.task = task_sum / double(n_rollouts);
    terms.physics = T(0.0);
  }
  return terms;
}

// Plain-value evaluation of a candidate (tests, CLI reporting).
LossReport total_report(const hand::HandModel& model, const sdf::SdfGrid& grid,
                        const sim::ObjectState& object, const sim::ContactParams& params,
                        const LossSettings& settings, const GraspCandidate& candidate);

}  // namespace graspd::loss
