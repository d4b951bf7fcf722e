#pragma once

// Articulated hand: a tree of links with revolute joints, per-link surface
// sample points, and per-link collision primitives. The base moves freely;
// everything else is a 1-DOF hinge.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graspd/diff/rotation.hpp"
#include "graspd/errors.hpp"
#include "graspd/sdf/primitives.hpp"

namespace graspd::hand {

enum class OpenAt { kLower, kUpper };

struct Joint {
  Vec3d axis{0, 0, 1};   // unit, in the link's joint frame
  double lower = 0.0;    // radians
  double upper = 0.0;
  OpenAt open_at = OpenAt::kUpper;  // which limit is the fully-open position

  double open_angle() const { return open_at == OpenAt::kLower ? lower : upper; }
  double mid_angle() const { return 0.5 * (lower + upper); }
};

struct Link {
  std::string name;
  int parent = -1;                   // -1 for the root
  Transformd origin;                 // parent frame -> this link's joint frame
  std::vector<Vec3d> surface_points; // in link frame
  std::vector<sdf::Primitive> primitives;
  int joint = -1;                    // index into HandModel::joints, -1 for root
};

struct Palm {
  int link = 0;
  Vec3d center{0, 0, 0};  // in link frame
  Vec3d normal{0, 0, 1};  // outward, unit, in link frame
};

struct HandModel {
  std::string name;
  std::vector<Link> links;
  std::vector<Joint> joints;
  Palm palm;
  // Unordered pairs (a < b) of link indices whose mutual contact is ignored
  // by the self-intersection loss. Parent-child pairs are always included.
  std::vector<std::pair<int, int>> neighbor_pairs;

  std::size_t num_joints() const { return joints.size(); }
  std::size_t num_surface_points() const {
    std::size_t n = 0;
    for (const Link& l : links) n += l.surface_points.size();
    return n;
  }
  bool are_neighbors(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (const auto& p : neighbor_pairs)
      if (p.first == a && p.second == b) return true;
    return false;
  }
  // Links with no children (grip extremities).
  std::vector<int> fingertip_links() const;

  void validate() const;  // throws ValidationError naming the offending field
};

struct HandPose {
  Vec3d base_position{0, 0, 0};
  Quatd base_rotation;               // unit
  std::vector<double> joints;        // radians, one per model joint

  Transformd base_transform() const { return make_transform(base_rotation, base_position); }
};

HandPose open_pose(const HandModel& model);
HandPose midrange_pose(const HandModel& model);

// JSON hand description (see docs/FORMATS.md). Validates before returning.
HandModel load_hand(const std::string& path);
HandModel parse_hand_json(const std::string& text, const std::string& origin_name);

// --- forward kinematics -------------------------------------------------

template <class T>
struct FkResult {
  std::vector<Transform<T>> link_world;  // world transform per link
  std::vector<Vec3<T>> points;           // world surface points, link-major
  std::vector<int> point_link;           // owning link per point
};

// World transforms and surface points for the given base/joint values.
// Instantiates on doubles for plain evaluation and on Vars for gradients.
template <class T>
FkResult<T> forward_kinematics(const HandModel& model, const Transform<T>& base,
                               std::span<const T> joint_angles) {
  if (joint_angles.size() != model.num_joints())
    throw ValidationError("forward_kinematics: joint vector length mismatch");
  FkResult<T> out;
  out.link_world.resize(model.links.size());
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const Link& link = model.links[i];
    Transform<T> local = to_transform<T>(link.origin);
    if (link.joint >= 0) {
      const Joint& joint = model.joints[link.joint];
      Quat<T> q = quat_exp(to_vec3<T>(joint.axis) * joint_angles[link.joint]);
      Transform<T> hinge{q.to_mat3(), Vec3<T>{T(0.0), T(0.0), T(0.0)}};
      local = local * hinge;
    }
    out.link_world[i] =
        link.parent < 0 ? base * local : out.link_world[link.parent] * local;
  }
  out.points.reserve(model.num_surface_points());
  out.point_link.reserve(model.num_surface_points());
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const Link& link = model.links[i];
    for (const Vec3d& p : link.surface_points) {
      out.points.push_back(out.link_world[i].apply(to_vec3<T>(p)));
      out.point_link.push_back(static_cast<int>(i));
    }
  }
  return out;
}

template <class T>
FkResult<T> forward_kinematics(const HandModel& model, const HandPose& pose) {
  std::vector<T> q(pose.joints.begin(), pose.joints.end());
  return forward_kinematics<T>(model, to_transform<T>(pose.base_transform()),
                               std::span<const T>(q));
}

// --- joint-range penalties ------------------------------------------------

// Distance of the joint vector from midrange: ||q - (up+low)/2||.
template <class T>
T qrange_loss(const HandModel& model, std::span<const T> joint_angles) {
  T sum(0.0);
  for (std::size_t j = 0; j < model.joints.size(); ++j) {
    T d = joint_angles[j] - model.joints[j].mid_angle();
    sum += d * d;
  }
  return sqrt(sum);
}

// Sum of limit overshoots: max(q - up, 0) + max(low - q, 0) per joint.
template <class T>
T qlimit_loss(const HandModel& model, std::span<const T> joint_angles) {
  T sum(0.0);
  for (std::size_t j = 0; j < model.joints.size(); ++j) {
    const Joint& joint = model.joints[j];
    sum += max(joint_angles[j] - joint.upper, T(0.0));
    sum += max(T(joint.lower) - joint_angles[j], T(0.0));
  }
  return sum;
}

struct JointLosses {
  double qrange;
  double qlimit;
};

inline JointLosses joint_losses(const HandModel& model, const HandPose& pose) {
  if (pose.joints.size() != model.num_joints())
    throw ValidationError("joint_losses: joint vector length mismatch");
  std::span<const double> q(pose.joints);
  return {qrange_loss(model, q), qlimit_loss(model, q)};
}

}  // namespace graspd::hand
