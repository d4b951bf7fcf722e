#include <doctest.h>

#include <cmath>
#include <random>

#include "graspd/diff/fd_check.hpp"
#include "graspd/hand/model.hpp"

using namespace graspd;
using namespace graspd::hand;

namespace {

const std::string kAssetDir = GRASPD_ASSET_DIR;

HandModel single_link_chain() {
  // Root + one link, revolute about z at the root origin.
  HandModel model;
  Link root;
  root.name = "base";
  root.surface_points.push_back({0, 0, 0});
  model.links.push_back(root);

  Link arm;
  arm.name = "arm";
  arm.parent = 0;
  arm.joint = 0;
  arm.surface_points.push_back({1, 0, 0});
  model.links.push_back(arm);

  Joint j;
  j.axis = {0, 0, 1};
  j.lower = -3.0;
  j.upper = 3.0;
  model.joints.push_back(j);
  model.palm.link = 0;
  return model;
}

}  // namespace

TEST_CASE("load_hand: bundled models validate") {
  HandModel tripod = load_hand(kAssetDir + "/hands/tripod.json");
  CHECK(tripod.num_joints() == 9);
  auto tips = tripod.fingertip_links();
  CHECK(tips.size() == 3);
  for (int tip : tips) CHECK(tripod.links[tip].surface_points.size() >= 8);

  HandModel pinch = load_hand(kAssetDir + "/hands/pinch.json");
  CHECK(pinch.num_joints() == 4);
  CHECK(pinch.fingertip_links().size() == 2);
}

TEST_CASE("load_hand: validation errors name the offending field") {
  // Lower limit above upper.
  const char* bad_limits = R"({
    "name": "bad",
    "links": [
      {"name": "root", "surface_points": [[0,0,0]]},
      {"name": "a", "parent": "root",
       "joint": {"axis": [0,0,1], "lower": 1.0, "upper": -1.0},
       "surface_points": [[0,0,0]]}
    ],
    "palm": {"link": "root", "center": [0,0,0], "normal": [0,0,1]}
  })";
  CHECK_THROWS_WITH_AS(parse_hand_json(bad_limits, "test"),
                       doctest::Contains("lower > upper"), ValidationError);

  // Self-parented link.
  const char* self_parent = R"({
    "name": "bad",
    "links": [
      {"name": "root", "surface_points": [[0,0,0]]},
      {"name": "a", "parent": "a",
       "joint": {"axis": [0,0,1], "lower": -1, "upper": 1},
       "surface_points": [[0,0,0]]}
    ],
    "palm": {"link": "root", "center": [0,0,0], "normal": [0,0,1]}
  })";
  CHECK_THROWS_AS(parse_hand_json(self_parent, "test"), ValidationError);

  // Missing palm.
  const char* no_palm = R"({
    "name": "bad",
    "links": [{"name": "root", "surface_points": [[0,0,0]]}]
  })";
  CHECK_THROWS_WITH_AS(parse_hand_json(no_palm, "test"), doctest::Contains("palm"),
                       ValidationError);
}

TEST_CASE("fk: zero configuration composes fixed transforms only") {
  HandModel tripod = load_hand(kAssetDir + "/hands/tripod.json");
  HandPose pose;
  pose.joints.assign(tripod.num_joints(), 0.0);
  auto fk = forward_kinematics<double>(tripod, pose);

  // Manually compose for a first-finger point.
  std::size_t offset = tripod.links[0].surface_points.size();
  const Link& l1 = tripod.links[1];
  Vec3d expected = l1.origin.apply(l1.surface_points[0]);
  CHECK(norm(fk.points[offset] - expected) < 1e-12);
}

TEST_CASE("fk: base translation shifts every point exactly") {
  HandModel tripod = load_hand(kAssetDir + "/hands/tripod.json");
  HandPose pose = open_pose(tripod);
  auto fk0 = forward_kinematics<double>(tripod, pose);
  Vec3d t{0.13, -0.05, 0.21};
  pose.base_position = t;
  auto fk1 = forward_kinematics<double>(tripod, pose);
  for (std::size_t i = 0; i < fk0.points.size(); ++i)
    CHECK(norm(fk1.points[i] - (fk0.points[i] + t)) < 1e-14);
}

TEST_CASE("fk: single revolute joint rotates the point") {
  HandModel chain = single_link_chain();
  chain.validate();
  HandPose pose;
  pose.joints = {M_PI / 2.0};
  auto fk = forward_kinematics<double>(chain, pose);
  // (1,0,0) about z by pi/2 -> (0,1,0)
  CHECK(norm(fk.points[1] - Vec3d{0, 1, 0}) < 1e-12);
}

TEST_CASE("fk: rigid invariance under an arbitrary base transform") {
  HandModel tripod = load_hand(kAssetDir + "/hands/tripod.json");
  HandPose pose = open_pose(tripod);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& q : pose.joints) q = u(rng) * 0.5;
  auto fk0 = forward_kinematics<double>(tripod, pose);

  Quatd rot = quat_from_axis_angle(normalized_or_zero(Vec3d{u(rng), u(rng), u(rng)}), 1.234);
  Vec3d t{u(rng), u(rng), u(rng)};
  Transformd rigid = make_transform(rot, t);

  HandPose moved = pose;
  moved.base_rotation = (rot * pose.base_rotation).normalized();
  moved.base_position = rigid.apply(pose.base_position);
  auto fk1 = forward_kinematics<double>(tripod, moved);
  for (std::size_t i = 0; i < fk0.points.size(); ++i)
    CHECK(norm(fk1.points[i] - rigid.apply(fk0.points[i])) < 1e-9);
}

TEST_CASE("fk gradients match finite differences") {
  HandModel pinch = load_hand(kAssetDir + "/hands/pinch.json");
  const std::size_t n_joints = pinch.num_joints();
  Quatd base_q = quat_from_axis_angle({0.3, 0.8, 0.52}, 0.9);  // fixed reference

  // Parameters: base position (3), rotation increment (3), joints.
  std::vector<double> x(6 + n_joints, 0.0);
  x[0] = 0.02;
  x[1] = -0.07;
  x[2] = 0.11;
  for (std::size_t j = 0; j < n_joints; ++j) x[6 + j] = -0.4 + 0.13 * double(j);

  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    std::size_t point = rng() % pinch.num_surface_points();
    int coord = int(rng() % 3);
    auto f = [&](std::span<const Var> v) {
      Vec3<Var> incr{v[3], v[4], v[5]};
      Quat<Var> q = quat_exp(incr) * to_quat<Var>(base_q);
      Transform<Var> base{q.to_mat3(), Vec3<Var>{v[0], v[1], v[2]}};
      std::vector<Var> joints(v.begin() + 6, v.end());
      auto fk = forward_kinematics<Var>(pinch, base, std::span<const Var>(joints));
      return fk.points[point][coord];
    };
    auto report = diff::finite_difference_check(f, x, 1e-6);
    CHECK(report.max_rel_error < 1e-5);
  }
}

TEST_CASE("joint losses: midrange, limits, and overshoot") {
  HandModel tripod = load_hand(kAssetDir + "/hands/tripod.json");

  HandPose mid = midrange_pose(tripod);
  auto losses = joint_losses(tripod, mid);
  CHECK(losses.qrange == doctest::Approx(0.0));
  CHECK(losses.qlimit == doctest::Approx(0.0));

  // One joint 0.1 rad above its upper limit.
  HandPose over = midrange_pose(tripod);
  over.joints[2] = tripod.joints[2].upper + 0.1;
  losses = joint_losses(tripod, over);
  CHECK(losses.qlimit == doctest::Approx(0.1));

  // At the limits exactly: qlimit 0, qrange = ||(up - low)/2||.
  HandPose at_limits = midrange_pose(tripod);
  double sum_sq = 0.0;
  for (std::size_t j = 0; j < tripod.num_joints(); ++j) {
    at_limits.joints[j] = tripod.joints[j].upper;
    double half = 0.5 * (tripod.joints[j].upper - tripod.joints[j].lower);
    sum_sq += half * half;
  }
  losses = joint_losses(tripod, at_limits);
  CHECK(losses.qlimit == doctest::Approx(0.0));
  CHECK(losses.qrange == doctest::Approx(std::sqrt(sum_sq)));
}

TEST_CASE("property: qlimit is zero iff all joints are within limits") {
  HandModel tripod = load_hand(kAssetDir + "/hands/tripod.json");
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    HandPose pose;
    pose.joints.resize(tripod.num_joints());
    bool all_within = true;
    for (std::size_t j = 0; j < pose.joints.size(); ++j) {
      pose.joints[j] = u(rng);
      const Joint& joint = tripod.joints[j];
      all_within = all_within && pose.joints[j] >= joint.lower &&
                   pose.joints[j] <= joint.upper;
    }
    auto losses = joint_losses(tripod, pose);
    CHECK((losses.qlimit == 0.0) == all_within);
  }
}
