#include "graspd/metrics/eval.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "graspd/log.hpp"

namespace graspd::metrics {

std::string to_json_line(const EvalReport& report) {
  nlohmann::json j;
  j["contact_area_cm2"] = report.contact_area_cm2;
  j["interpen_volume_cm3"] = report.interpen_volume_cm3;
  if (report.ratio_cm_inv)
    j["ratio_cm_inv"] = *report.ratio_cm_inv;
  else
    j["ratio_cm_inv"] = nullptr;
  j["epsilon"] = report.epsilon;
  j["displacement_cm"] =
      std::isfinite(report.displacement_cm) ? nlohmann::json(report.displacement_cm)
                                            : nlohmann::json("inf");
  j["contact_count"] = report.contact_count;
  return j.dump();
}

std::vector<Contact> extract_contacts(const hand::HandModel& model,
                                      const hand::HandPose& pose,
                                      const sdf::SdfGrid& grid) {
  auto fk = hand::forward_kinematics<double>(model, pose);
  std::vector<Contact> contacts;
  for (const Vec3d& x : fk.points) {
    if (sdf::query(grid, x) >= 0.0) continue;
    Vec3d g = sdf::grad(grid, x);
    double n = norm(g);
    if (n < 1e-9) continue;
    contacts.push_back({x, g * (-1.0 / n)});
  }
  return contacts;
}

namespace {

// Voxel key on a fixed world lattice (21 bits per signed axis).
inline std::uint64_t voxel_key(long i, long j, long k) {
  constexpr long bias = 1L << 20;
  return (static_cast<std::uint64_t>(i + bias) << 42) |
         (static_cast<std::uint64_t>(j + bias) << 21) |
         static_cast<std::uint64_t>(k + bias);
}

// Calls fn(center, phi_hand) for every lattice voxel whose center lies within
// `margin` of some hand primitive (deduplicated across primitives).
template <class Fn>
void for_hand_voxels(const hand::HandModel& model, const hand::HandPose& pose,
                     double resolution, double margin, Fn&& fn) {
  auto fk = hand::forward_kinematics<double>(model, pose);
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t l = 0; l < model.links.size(); ++l) {
    const Transformd& world = fk.link_world[l];
    Transformd to_local = world.inverse();
    for (const sdf::Primitive& prim : model.links[l].primitives) {
      Vec3d c = world.apply(prim.bound_center());
      double r = prim.bound_radius() + margin + resolution;
      long lo[3], hi[3];
      for (int a = 0; a < 3; ++a) {
        lo[a] = static_cast<long>(std::floor((c[a] - r) / resolution));
        hi[a] = static_cast<long>(std::ceil((c[a] + r) / resolution));
      }
      for (long k = lo[2]; k <= hi[2]; ++k) {
        for (long j = lo[1]; j <= hi[1]; ++j) {
          for (long i = lo[0]; i <= hi[0]; ++i) {
            Vec3d center{(i + 0.5) * resolution, (j + 0.5) * resolution,
                         (k + 0.5) * resolution};
            double phi = sdf::primitive_phi(prim, to_local.apply(center));
            if (phi > margin) continue;
            if (!seen.insert(voxel_key(i, j, k)).second) continue;
            // Union distance over every primitive of every link.
            double phi_union = phi;
            for (std::size_t l2 = 0; l2 < model.links.size() && phi_union > -margin;
                 ++l2) {
              Transformd to_local2 = fk.link_world[l2].inverse();
              for (const sdf::Primitive& p2 : model.links[l2].primitives) {
                phi_union =
                    std::min(phi_union, sdf::primitive_phi(p2, to_local2.apply(center)));
              }
            }
            fn(center, phi_union);
          }
        }
      }
    }
  }
}

}  // namespace

double interpenetration_volume(const hand::HandModel& model, const hand::HandPose& pose,
                               const sdf::SdfGrid& grid, double resolution) {
  std::size_t count = 0;
  for_hand_voxels(model, pose, resolution, 0.0, [&](const Vec3d& center, double phi_hand) {
    if (phi_hand > 0.0) return;
    if (sdf::query(grid, center) < 0.0) ++count;
  });
  const double voxel_cm3 = std::pow(resolution * 100.0, 3);
  return static_cast<double>(count) * voxel_cm3;
}

double contact_area(const hand::HandModel& model, const hand::HandPose& pose,
                    const sdf::SdfGrid& grid, double band, double resolution) {
  std::size_t count = 0;
  const double half = 0.5 * resolution;
  for_hand_voxels(model, pose, resolution, half,
                  [&](const Vec3d& center, double phi_hand) {
                    if (std::abs(phi_hand) > half) return;  // not on the shell
                    if (std::abs(sdf::query(grid, center)) < band) ++count;
                  });
  const double voxel_cm2 = std::pow(resolution * 100.0, 2);
  return static_cast<double>(count) * voxel_cm2;
}

double epsilon_metric(std::span<const Contact> contacts, double mu, const Vec3d& com,
                      double rho, int pyramid_edges, int directions, opt::Rng& rng) {
  if (contacts.empty()) return 0.0;
  if (pyramid_edges < 3) throw ValidationError("epsilon_metric: need >= 3 pyramid edges");
  if (rho <= 0.0) throw ValidationError("epsilon_metric: rho must be positive");

  struct Wrench6 {
    double w[6];
  };
  std::vector<Wrench6> wrenches;
  wrenches.reserve(contacts.size() * pyramid_edges);
  for (const Contact& c : contacts) {
    Vec3d t1, t2;
    orthonormal_basis(c.normal, t1, t2);
    for (int e = 0; e < pyramid_edges; ++e) {
      double angle = 2.0 * M_PI * e / pyramid_edges;
      Vec3d f = c.normal + (t1 * std::cos(angle) + t2 * std::sin(angle)) * mu;
      Vec3d tau = cross(c.point - com, f) / rho;
      wrenches.push_back({{f.x, f.y, f.z, tau.x, tau.y, tau.z}});
    }
  }

  double best = std::numeric_limits<double>::max();
  double dir[6];
  double antithetic[6];
  for (int s = 0; s < directions; ++s) {
    if (s % 2 == 0) {
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (double& d : dir) {
          d = rng.gaussian();
          norm2 += d * d;
        }
      } while (norm2 < 1e-12);
      double inv = 1.0 / std::sqrt(norm2);
      for (int a = 0; a < 6; ++a) {
        dir[a] *= inv;
        antithetic[a] = -dir[a];
      }
    } else {
      for (int a = 0; a < 6; ++a) dir[a] = antithetic[a];
    }
    double support = -std::numeric_limits<double>::max();
    for (const Wrench6& w : wrenches) {
      double dp = 0.0;
      for (int a = 0; a < 6; ++a) dp += w.w[a] * dir[a];
      support = std::max(support, dp);
    }
    best = std::min(best, support);
    if (best <= 0.0) return 0.0;  // origin provably outside the sampled hull
  }
  return std::max(0.0, best);
}

double free_fall_displacement_cm(double horizon, double dt) {
  const long steps = std::lround(horizon / dt);
  // Semi-implicit Euler closed form: g dt^2 T(T+1)/2.
  return 0.5 * 9.8 * dt * dt * static_cast<double>(steps) *
         static_cast<double>(steps + 1) * 100.0;
}

double displacement_test(const hand::HandModel& model, const hand::HandPose& pose,
                         const sdf::SdfGrid& grid, const sim::ObjectState& object,
                         const sim::ContactParams& params, double horizon) {
  sim::ContactParams p = params;
  p.offset = sdf::LevelSetOffset(0.0);  // always against the true surface
  const int steps = static_cast<int>(std::lround(horizon / p.dt));

  auto fk = hand::forward_kinematics<double>(model, pose);
  const Vec3d com0 = object.pose.apply(object.com_local);

  const Vec3d dirs[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                         {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  double total = 0.0;
  for (const Vec3d& dir : dirs) {
    sim::Wrenchd gravity;
    gravity.force = dir * (9.8 * object.mass);
    try {
      auto result = sim::rollout_actual<double>(std::span<const Vec3d>(fk.points), grid,
                                                object, sim::Twistd{}, p, steps, gravity);
      total += norm(result.final_com - com0) * 100.0;
    } catch (const NumericalError& e) {
      log::warn("displacement_test diverged: %s", e.what());
      return std::numeric_limits<double>::infinity();
    }
  }
  return total / 6.0;
}

EvalReport evaluate_grasp(const hand::HandModel& model, const hand::HandPose& pose,
                          const sdf::SdfGrid& grid, const sim::ObjectState& object,
                          const sim::ContactParams& params, std::uint64_t epsilon_seed,
                          int pyramid_edges, int directions) {
  EvalReport report;
  report.contact_area_cm2 = contact_area(model, pose, grid);
  report.interpen_volume_cm3 = interpenetration_volume(model, pose, grid);
  if (report.interpen_volume_cm3 > 0.0)
    report.ratio_cm_inv = report.contact_area_cm2 / report.interpen_volume_cm3;
  auto contacts = extract_contacts(model, pose, grid);
  report.contact_count = static_cast<int>(contacts.size());
  opt::Rng rng(epsilon_seed);
  report.epsilon =
      epsilon_metric(contacts, params.mu, object.pose.apply(object.com_local),
                     object.bounding_radius, pyramid_edges, directions, rng);
  report.displacement_cm = displacement_test(model, pose, grid, object, params);
  return report;
}

}  // namespace graspd::metrics
