#include <doctest.h>

#include <cmath>
#include <random>

#include "graspd/diff/fd_check.hpp"
#include "graspd/loss/losses.hpp"
#include "support.hpp"

using namespace graspd;
using namespace graspd::loss;

namespace {

const std::string kAssetDir = GRASPD_ASSET_DIR;

sdf::SdfGrid sphere_grid_local(double radius = 0.03, int n = 64, double pad = 0.01) {
  double e = radius + pad;
  return sdf::sample_grid([radius](const Vec3d& p) { return norm(p) - radius; }, {n, n, n},
                          {-e, -e, -e}, {e, e, e});
}

struct Fixture {
  hand::HandModel model = hand::load_hand(kAssetDir + "/hands/tripod.json");
  sdf::SdfGrid grid = sphere_grid_local();
  sim::ObjectState object = sim::make_object_state(grid, 1000.0);
  sim::ContactParams params;
  LossSettings settings;

  hand::HandPose far_pose() const {
    hand::HandPose pose = hand::midrange_pose(model);
    pose.base_position = {0.5, 0.5, 0.5};  // nowhere near the object
    return pose;
  }
};

LossReport report_of(const Fixture& f, const GraspCandidate& candidate) {
  return total_report(f.model, f.grid, f.object, f.params, f.settings, candidate);
}

}  // namespace

TEST_CASE("task loss: zero forces leave the velocity-set mean") {
  Fixture f;
  GraspCandidate candidate =
      GraspCandidate::zeros(f.model, f.far_pose(), f.settings.velocities.size());
  LossReport report = report_of(f, candidate);
  // mean of {0, ||(.01,.01,.01)||, ||-(.01,.01,.01)||} = (2/3) * 0.01 * sqrt(3)
  CHECK(report.task == doctest::Approx(0.011547).epsilon(1e-4));
  CHECK(report.physics == doctest::Approx(0.0));
  CHECK(report.qrange == doctest::Approx(0.0));
  CHECK(report.qlimit == doctest::Approx(0.0));
  CHECK(report.inter == doctest::Approx(0.0));
}

TEST_CASE("task loss: per-rollout forces can cancel each velocity exactly") {
  Fixture f;
  GraspCandidate candidate =
      GraspCandidate::zeros(f.model, f.far_pose(), f.settings.velocities.size());
  const std::size_t P = f.model.num_surface_points();
  // Spread force = -m v / dt over the first four points of each rollout.
  for (std::size_t m = 0; m < f.settings.velocities.size(); ++m) {
    Vec3d needed = f.settings.velocities.items[m].lin *
                   (-f.object.mass / f.params.dt / 4.0);
    for (int i = 0; i < 4; ++i) candidate.prescribed[m * P + i].force = needed;
  }
  LossReport report = report_of(f, candidate);
  CHECK(report.task == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("task loss: single zero velocity with a zero-net couple-free wrench set") {
  Fixture f;
  f.settings.velocities.items = {sim::Twistd{}};  // V = {0}
  GraspCandidate candidate = GraspCandidate::zeros(f.model, f.far_pose(), 1);
  candidate.prescribed[0].force = {5, 0, 0};
  candidate.prescribed[1].force = {-5, 0, 0};  // net zero force, zero torque
  LossReport report = report_of(f, candidate);
  CHECK(report.task == doctest::Approx(0.0));
}

TEST_CASE("physics loss: far hand cases") {
  Fixture f;
  GraspCandidate candidate =
      GraspCandidate::zeros(f.model, f.far_pose(), f.settings.velocities.size());
  CHECK(report_of(f, candidate).physics == doctest::Approx(0.0));

  candidate.prescribed[7].force = {1, 0, 0};  // one unit residual
  CHECK(report_of(f, candidate).physics == doctest::Approx(1.0));
}

TEST_CASE("physics loss: matching the actual wrench zeroes the residual") {
  Fixture f;
  // Find a pose with the fingers actually inside the sphere.
  hand::HandPose pose = hand::midrange_pose(f.model);
  for (double z = -0.030; z >= -0.080; z -= 0.005) {
    pose.base_position = {0, 0, z};
    auto probe = hand::forward_kinematics<double>(f.model, pose);
    int hits = 0;
    for (const Vec3d& p : probe.points)
      if (sdf::query(f.grid, p) < -1e-3) ++hits;
    if (hits >= 3) break;
  }
  GraspCandidate candidate =
      GraspCandidate::zeros(f.model, pose, f.settings.velocities.size());

  auto fk = hand::forward_kinematics<double>(f.model, pose);
  Vec3d com = f.object.pose.apply(f.object.com_local);
  int penetrating = 0;
  const std::size_t P = f.model.num_surface_points();
  for (std::size_t i = 0; i < P; ++i) {
    for (std::size_t m = 0; m < f.settings.velocities.size(); ++m) {
      const sim::Twistd& v0 = f.settings.velocities.items[m];
      Vec3d v_rel = v0.lin + cross(v0.ang, fk.points[i] - com);
      sim::ContactForced cf = sim::contact_force(fk.points[i], v_rel, f.grid, f.params);
      Vec3d force = cf.f_c();
      if (m == 0 && norm(force) > 0.0) ++penetrating;
      candidate.prescribed[m * P + i].force = force;
      candidate.prescribed[m * P + i].torque = cross(fk.points[i] - com, force);
    }
  }
  REQUIRE(penetrating > 0);  // fixture sanity: this pose must touch
  LossReport report = report_of(f, candidate);
  CHECK(report.physics == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("physics = 0 implies identical actual and prescribed trajectories") {
  Fixture f;
  hand::HandPose pose = hand::midrange_pose(f.model);
  for (double z = -0.030; z >= -0.080; z -= 0.005) {
    pose.base_position = {0, 0, z};
    auto probe = hand::forward_kinematics<double>(f.model, pose);
    int hits = 0;
    for (const Vec3d& p : probe.points)
      if (sdf::query(f.grid, p) < -1e-3) ++hits;
    if (hits >= 3) break;
  }
  f.settings.velocities.items = {sim::Twistd{{0.01, 0.0, -0.02}, {0, 0, 0}}};
  GraspCandidate candidate = GraspCandidate::zeros(f.model, pose, 1);

  auto fk = hand::forward_kinematics<double>(f.model, pose);
  Vec3d com = f.object.pose.apply(f.object.com_local);
  const std::size_t P = f.model.num_surface_points();
  const sim::Twistd v0 = f.settings.velocities.items[0];
  for (std::size_t i = 0; i < P; ++i) {
    Vec3d v_rel = v0.lin + cross(v0.ang, fk.points[i] - com);
    sim::ContactForced cf = sim::contact_force(fk.points[i], v_rel, f.grid, f.params);
    candidate.prescribed[i].force = cf.f_c();
    candidate.prescribed[i].torque = cross(fk.points[i] - com, cf.f_c());
  }
  CHECK(report_of(f, candidate).physics == doctest::Approx(0.0));

  // Zero residual means the prescribed rollout applies exactly the wrench the
  // contact model produces at this initial state: identical trajectories.
  auto actual = sim::rollout_actual<double>(std::span<const Vec3d>(fk.points), f.grid,
                                            f.object, v0, f.params, 1);
  auto prescribed = sim::rollout_prescribed<double>(
      std::span<const sim::Wrenchd>(candidate.prescribed), f.object, v0,
      f.params.dt, 1);
  CHECK(norm(actual.final_velocity.lin - prescribed.final_velocity.lin) < 1e-12);
  CHECK(norm(actual.final_velocity.ang - prescribed.final_velocity.ang) < 1e-12);
}

TEST_CASE("self-intersection: open hand clean, forced overlap penalized") {
  Fixture f;
  GraspCandidate open_candidate = GraspCandidate::zeros(
      f.model, hand::open_pose(f.model), f.settings.velocities.size());
  open_candidate.pose.base_position = {0.5, 0.5, 0.5};
  CHECK(report_of(f, open_candidate).inter == doctest::Approx(0.0));

  // Curl two fingers hard into each other's volume (beyond limits, which the
  // inter term does not care about).
  hand::HandPose tangled = hand::open_pose(f.model);
  tangled.base_position = {0.5, 0.5, 0.5};
  for (std::size_t j = 0; j < tangled.joints.size(); ++j) tangled.joints[j] = -1.9;
  GraspCandidate overlapped =
      GraspCandidate::zeros(f.model, tangled, f.settings.velocities.size());
  double inter = report_of(f, overlapped).inter;
  CHECK(inter > 0.0);
}

TEST_CASE("self-intersection: neighbor pairs are excluded") {
  // Two-link chain whose links always overlap; as parent and child they are
  // neighbors, so the loss must stay zero.
  hand::HandModel model;
  hand::Link root;
  root.name = "a";
  root.surface_points.push_back({0, 0, 0});
  root.primitives.push_back(sdf::Primitive::sphere({0, 0, 0}, 0.02));
  model.links.push_back(root);
  hand::Link child;
  child.name = "b";
  child.parent = 0;
  child.joint = 0;
  child.surface_points.push_back({0.001, 0, 0});
  child.primitives.push_back(sdf::Primitive::sphere({0, 0, 0}, 0.02));
  model.links.push_back(child);
  hand::Joint joint;
  joint.axis = {0, 0, 1};
  joint.lower = -1;
  joint.upper = 1;
  model.joints.push_back(joint);
  model.palm.link = 0;
  model.neighbor_pairs = {{0, 1}};
  model.validate();

  auto plan = SelfIntersectionPlan::build(model);
  CHECK(plan.pairs.empty());

  hand::HandPose pose;
  pose.joints = {0.0};
  auto fk = hand::forward_kinematics<double>(model, pose);
  CHECK(self_intersection_squared(model, plan, fk, 1e6) == 0.0);
}

TEST_CASE("self-intersection magnitude follows Eq. 4 on a constructed overlap") {
  // Two capsules (non-neighbors via an intermediate link) overlapping by 1 mm.
  hand::HandModel model;
  hand::Link root;
  root.name = "root";
  root.surface_points.push_back({0, 0, 0});
  model.links.push_back(root);

  hand::Link mid;
  mid.name = "mid";
  mid.parent = 0;
  mid.joint = 0;
  mid.surface_points.push_back({0, 0, 0});
  model.links.push_back(mid);

  hand::Link far;
  far.name = "far";
  far.parent = 1;
  far.joint = 1;
  // Single probe point that will sit 1 mm inside the root's sphere.
  far.surface_points.push_back({0, 0, 0});
  model.links.push_back(far);

  root.primitives.clear();
  model.links[0].primitives.push_back(sdf::Primitive::sphere({0, 0, 0}, 0.02));
  for (int i = 0; i < 2; ++i) {
    hand::Joint j;
    j.axis = {0, 0, 1};
    j.lower = -1;
    j.upper = 1;
    model.joints.push_back(j);
  }
  model.palm.link = 0;
  model.neighbor_pairs = {{0, 1}, {1, 2}};
  // Place "far"'s origin so its probe point is at radius 0.019: 1 mm inside.
  model.links[2].origin.p = {0.019, 0, 0};
  model.validate();

  auto plan = SelfIntersectionPlan::build(model);
  REQUIRE(plan.pairs.size() == 1);

  hand::HandPose pose;
  pose.joints = {0.0, 0.0};
  auto fk = hand::forward_kinematics<double>(model, pose);
  double squared = self_intersection_squared(model, plan, fk, 1e6);
  // One point, phi = -0.001, k_n = 1e6: force magnitude 1000 N.
  CHECK(std::sqrt(squared) == doctest::Approx(1000.0).epsilon(1e-9));
}

TEST_CASE("all losses are nonnegative over random candidates") {
  Fixture f;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    hand::HandPose pose = hand::open_pose(f.model);
    pose.base_position = {0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng)};
    pose.base_rotation =
        quat_from_axis_angle(normalized_or_zero(Vec3d{u(rng), u(rng), u(rng)}), u(rng));
    for (auto& q : pose.joints) q += 0.5 * u(rng);
    GraspCandidate candidate =
        GraspCandidate::zeros(f.model, pose, f.settings.velocities.size());
    for (auto& w : candidate.prescribed) {
      w.force = {u(rng), u(rng), u(rng)};
      w.torque = {0.01 * u(rng), 0.01 * u(rng), 0.01 * u(rng)};
    }
    LossReport report = report_of(f, candidate);
    CHECK(report.task >= 0.0);
    CHECK(report.physics >= 0.0);
    CHECK(report.qrange >= 0.0);
    CHECK(report.qlimit >= 0.0);
    CHECK(report.inter >= 0.0);
    CHECK(report.finite());
  }
}

TEST_CASE("loss gradients match finite differences away from kinks") {
  Fixture f;
  hand::HandModel pinch = hand::load_hand(kAssetDir + "/hands/pinch.json");
  auto plan = SelfIntersectionPlan::build(pinch);
  const std::size_t P = pinch.num_surface_points();
  const std::size_t M = f.settings.velocities.size();
  const std::size_t J = pinch.num_joints();
  // Exact-gradient mode for the check: no leak on either side.
  sim::ContactParams params = f.params;
  params.alpha = 0.0;

  // Identity base below the sphere: fingers extend along +z into the object.
  Quatd base_q;

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int done = 0, attempts = 0;
  while (done < 3 && ++attempts < 500) {
    std::vector<double> x(6 + J + 6 * M * P, 0.0);
    x[0] = 0.02 * u(rng);
    x[1] = 0.02 * u(rng);
    x[2] = -0.055 + 0.015 * u(rng);
    for (std::size_t j = 0; j < J; ++j) x[6 + j] = -0.3 + 0.2 * u(rng);
    for (std::size_t w = 0; w < M * P; ++w)
      for (int c = 0; c < 6; ++c) x[6 + J + 6 * w + c] = 0.5 * u(rng);

    auto eval = [&](std::span<const Var> v, int which) -> Var {
      Vec3<Var> incr{v[3], v[4], v[5]};
      Quat<Var> q = quat_exp(incr) * to_quat<Var>(base_q);
      Transform<Var> base{q.to_mat3(), Vec3<Var>{v[0], v[1], v[2]}};
      std::vector<Var> joints(v.begin() + 6, v.begin() + 6 + J);
      std::vector<sim::Wrench<Var>> prescribed(M * P);
      for (std::size_t w = 0; w < M * P; ++w) {
        prescribed[w].force = {v[6 + J + 6 * w], v[6 + J + 6 * w + 1],
                               v[6 + J + 6 * w + 2]};
        prescribed[w].torque = {v[6 + J + 6 * w + 3], v[6 + J + 6 * w + 4],
                                v[6 + J + 6 * w + 5]};
      }
      auto terms = evaluate_losses<Var>(pinch, plan, f.grid, f.object, params, f.settings,
                                        base, std::span<const Var>(joints),
                                        std::span<const sim::Wrench<Var>>(prescribed));
      switch (which) {
        case 0: return terms.task;
        case 1: return terms.physics;
        case 2: return terms.qrange;
        default: return terms.qlimit;
      }
    };

    // Only accept genuinely smooth configurations: at least one solidly
    // penetrating point, nothing straddling a kink of the contact model.
    {
      hand::HandPose probe;
      probe.base_position = {x[0], x[1], x[2]};
      probe.base_rotation = base_q;
      probe.joints.assign(x.begin() + 6, x.begin() + 6 + J);
      auto fk = hand::forward_kinematics<double>(pinch, probe);
      bool penetrating = false;
      for (const Vec3d& p : fk.points)
        if (sdf::query(f.grid, p) < -1e-3) penetrating = true;
      if (!penetrating || !testsupport::smooth_contact_config(f.grid, fk.points)) continue;
    }
    ++done;

    for (int which = 0; which < 4; ++which) {
      auto f_one = [&](std::span<const Var> v) { return eval(v, which); };
      auto report = diff::finite_difference_check(f_one, x, 1e-5);
      CAPTURE(which);
      CHECK(report.max_rel_error < 1e-3);
    }
  }
  CHECK(done == 3);  // the sampler must actually find penetrating configs
}
