#pragma once

// Grasp evaluation: voxelized contact area / interpenetration volume, a
// sampled Ferrari-Canny epsilon on the pyramid-approximated friction cones,
// and a gravity shake test measured in our own simulator.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graspd/opt/optimizer.hpp"
#include "graspd/sim/rollout.hpp"

namespace graspd::metrics {

struct EvalReport {
  double contact_area_cm2 = 0.0;
  double interpen_volume_cm3 = 0.0;
  std::optional<double> ratio_cm_inv;  // absent when the volume is zero
  double epsilon = 0.0;
  double displacement_cm = 0.0;
  int contact_count = 0;
};

std::string to_json_line(const EvalReport& report);

struct Contact {
  Vec3d point;
  Vec3d normal;  // unit, pointing into the object (direction of applied force)
};

// Hand surface points penetrating the true (r = 0) surface.
std::vector<Contact> extract_contacts(const hand::HandModel& model,
                                      const hand::HandPose& pose,
                                      const sdf::SdfGrid& grid);

// Solid voxelization of the hand primitives at `resolution`; counts voxel
// centers inside the object (phi < 0). Returns cm^3.
double interpenetration_volume(const hand::HandModel& model, const hand::HandPose& pose,
                               const sdf::SdfGrid& grid, double resolution = 1e-3);

// Shell voxelization (|phi_hand| <= resolution/2); counts shell voxels within
// `band` of the object surface. Returns cm^2.
double contact_area(const hand::HandModel& model, const hand::HandPose& pose,
                    const sdf::SdfGrid& grid, double band = 1e-3,
                    double resolution = 1e-3);

// Sampled largest origin-centered ball in the grasp wrench space: friction
// cones become k-edge pyramids with unit normal force, torques are scaled by
// 1/rho, and the support minimum is taken over `directions` sampled unit
// 6-vectors (antithetic pairs, so a larger budget with the same rng extends
// the same stream). Result is clamped at zero.
double epsilon_metric(std::span<const Contact> contacts, double mu, const Vec3d& com,
                      double rho, int pyramid_edges, int directions, opt::Rng& rng);

// Mean COM displacement (cm) over gravity applied along +-x, +-y, +-z for a
// 0.5 s horizon at the contact timestep; +inf when the rollout diverges.
double displacement_test(const hand::HandModel& model, const hand::HandPose& pose,
                         const sdf::SdfGrid& grid, const sim::ObjectState& object,
                         const sim::ContactParams& params, double horizon = 0.5);

// Free-fall displacement (cm) over the same protocol, for normalization.
double free_fall_displacement_cm(double horizon = 0.5, double dt = 1e-5);

EvalReport evaluate_grasp(const hand::HandModel& model, const hand::HandPose& pose,
                          const sdf::SdfGrid& grid, const sim::ObjectState& object,
                          const sim::ContactParams& params, std::uint64_t epsilon_seed = 0,
                          int pyramid_edges = 8, int directions = 1024);

}  // namespace graspd::metrics
