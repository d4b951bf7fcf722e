#include "graspd/hand/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace graspd::hand {

using nlohmann::json;

std::vector<int> HandModel::fingertip_links() const {
  std::vector<bool> has_child(links.size(), false);
  for (const Link& l : links)
    if (l.parent >= 0) has_child[l.parent] = true;
  std::vector<int> tips;
  for (std::size_t i = 0; i < links.size(); ++i)
    if (!has_child[i] && static_cast<int>(i) != palm.link)
      tips.push_back(static_cast<int>(i));
  return tips;
}

void HandModel::validate() const {
  if (links.empty()) throw ValidationError(name + ": hand has no links");
  int roots = 0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const Link& link = links[i];
    if (link.parent == static_cast<int>(i))
      throw ValidationError(name + ": link '" + link.name + "' is parented to itself");
    if (link.parent >= static_cast<int>(links.size()))
      throw ValidationError(name + ": link '" + link.name + "' has an out-of-range parent");
    if (link.parent < 0) {
      ++roots;
      if (link.joint >= 0)
        throw ValidationError(name + ": root link '" + link.name + "' must not have a joint");
    } else {
      if (link.parent > static_cast<int>(i))
        throw ValidationError(name + ": links must be listed parents-first ('" +
                              link.name + "')");
      if (link.joint < 0 || link.joint >= static_cast<int>(joints.size()))
        throw ValidationError(name + ": non-root link '" + link.name + "' needs a joint");
    }
  }
  if (roots != 1) throw ValidationError(name + ": hand must have exactly one root link");

  // Parents-first ordering over a single root already excludes cycles; walk
  // up anyway so a corrupted model fails loudly rather than looping.
  for (std::size_t i = 0; i < links.size(); ++i) {
    int hops = 0;
    for (int p = links[i].parent; p >= 0; p = links[p].parent)
      if (++hops > static_cast<int>(links.size()))
        throw ValidationError(name + ": cycle detected at link '" + links[i].name + "'");
  }

  for (std::size_t j = 0; j < joints.size(); ++j) {
    const Joint& joint = joints[j];
    if (joint.lower > joint.upper)
      throw ValidationError(name + ": joint " + std::to_string(j) +
                            " has lower limit above upper limit");
    if (std::abs(norm(joint.axis) - 1.0) > 1e-6)
      throw ValidationError(name + ": joint " + std::to_string(j) + " axis is not unit");
  }

  if (palm.link < 0 || palm.link >= static_cast<int>(links.size()))
    throw ValidationError(name + ": palm.link out of range");
  if (std::abs(norm(palm.normal) - 1.0) > 1e-6)
    throw ValidationError(name + ": palm.normal is not unit");

  for (int tip : fingertip_links())
    if (links[tip].surface_points.empty())
      throw ValidationError(name + ": fingertip link '" + links[tip].name +
                            "' has no surface points");
  if (num_surface_points() == 0)
    throw ValidationError(name + ": hand has no surface points");
}

HandPose open_pose(const HandModel& model) {
  HandPose pose;
  pose.joints.resize(model.num_joints());
  for (std::size_t j = 0; j < model.joints.size(); ++j)
    pose.joints[j] = model.joints[j].open_angle();
  return pose;
}

HandPose midrange_pose(const HandModel& model) {
  HandPose pose;
  pose.joints.resize(model.num_joints());
  for (std::size_t j = 0; j < model.joints.size(); ++j)
    pose.joints[j] = model.joints[j].mid_angle();
  return pose;
}

namespace {

Vec3d parse_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(what + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Fixed transforms are given as xyz translation + rpy (roll-pitch-yaw,
// radians, applied x then y then z).
Transformd parse_origin(const json& j, const std::string& what) {
  Vec3d xyz{0, 0, 0}, rpy{0, 0, 0};
  if (j.contains("xyz")) xyz = parse_vec3(j["xyz"], what + ".xyz");
  if (j.contains("rpy")) rpy = parse_vec3(j["rpy"], what + ".rpy");
  Quatd q = quat_from_axis_angle({0, 0, 1}, rpy.z) *
            quat_from_axis_angle({0, 1, 0}, rpy.y) *
            quat_from_axis_angle({1, 0, 0}, rpy.x);
  return make_transform(q, xyz);
}

sdf::Primitive parse_primitive(const json& j, const std::string& what) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "sphere")
    return sdf::Primitive::sphere(parse_vec3(j.at("center"), what + ".center"),
                                  j.at("radius").get<double>());
  if (type == "capsule")
    return sdf::Primitive::capsule(parse_vec3(j.at("a"), what + ".a"),
                                   parse_vec3(j.at("b"), what + ".b"),
                                   j.at("radius").get<double>());
  if (type == "box")
    return sdf::Primitive::box(parse_vec3(j.at("center"), what + ".center"),
                               parse_vec3(j.at("half_extents"), what + ".half_extents"));
  throw ValidationError(what + ": unknown primitive type '" + type + "'");
}

}  // namespace

HandModel parse_hand_json(const std::string& text, const std::string& origin_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(origin_name + ": invalid JSON: " + e.what());
  }

  HandModel model;
  try {
    model.name = root.value("name", origin_name);
    if (!root.contains("links")) throw ValidationError(origin_name + ": missing 'links'");

    std::vector<std::string> names;
    for (const json& jl : root["links"]) {
      Link link;
      link.name = jl.at("name").get<std::string>();
      if (jl.contains("parent")) {
        const json& p = jl["parent"];
        if (p.is_number_integer()) {
          link.parent = p.get<int>();
        } else {
          const std::string pname = p.get<std::string>();
          auto it = std::find(names.begin(), names.end(), pname);
          if (it == names.end())
            throw ValidationError(model.name + ": link '" + link.name +
                                  "' references unknown parent '" + pname + "'");
          link.parent = static_cast<int>(it - names.begin());
        }
      }
      if (jl.contains("origin")) link.origin = parse_origin(jl["origin"], link.name + ".origin");
      if (jl.contains("surface_points"))
        for (const json& jp : jl["surface_points"])
          link.surface_points.push_back(parse_vec3(jp, link.name + ".surface_points[]"));
      if (jl.contains("primitives"))
        for (const json& jp : jl["primitives"])
          link.primitives.push_back(parse_primitive(jp, link.name + ".primitives[]"));
      if (jl.contains("joint")) {
        const json& jj = jl["joint"];
        Joint joint;
        joint.axis = parse_vec3(jj.at("axis"), link.name + ".joint.axis");
        double n = norm(joint.axis);
        if (n < 1e-9)
          throw ValidationError(model.name + ": joint axis of '" + link.name + "' is zero");
        joint.axis = joint.axis / n;
        joint.lower = jj.at("lower").get<double>();
        joint.upper = jj.at("upper").get<double>();
        if (joint.lower > joint.upper)
          throw ValidationError(model.name + ": joint of link '" + link.name +
                                "' has lower > upper");
        const std::string open = jj.value("open_at", "upper");
        if (open == "lower") joint.open_at = OpenAt::kLower;
        else if (open == "upper") joint.open_at = OpenAt::kUpper;
        else
          throw ValidationError(model.name + ": joint of link '" + link.name +
                                "' has invalid open_at '" + open + "'");
        link.joint = static_cast<int>(model.joints.size());
        model.joints.push_back(joint);
      }
      names.push_back(link.name);
      model.links.push_back(std::move(link));
    }

    if (!root.contains("palm"))
      throw ValidationError(model.name + ": missing 'palm' section");
    const json& jp = root["palm"];
    if (jp.contains("link")) {
      const json& pl = jp["link"];
      if (pl.is_number_integer()) {
        model.palm.link = pl.get<int>();
      } else {
        auto it = std::find(names.begin(), names.end(), pl.get<std::string>());
        if (it == names.end())
          throw ValidationError(model.name + ": palm.link references unknown link");
        model.palm.link = static_cast<int>(it - names.begin());
      }
    }
    model.palm.center = parse_vec3(jp.at("center"), "palm.center");
    model.palm.normal = parse_vec3(jp.at("normal"), "palm.normal");
    double n = norm(model.palm.normal);
    if (n < 1e-9) throw ValidationError(model.name + ": palm.normal is zero");
    model.palm.normal = model.palm.normal / n;

    // Parent-child pairs never count as self-intersection.
    std::set<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < model.links.size(); ++i)
      if (model.links[i].parent >= 0)
        pairs.emplace(std::min<int>(model.links[i].parent, static_cast<int>(i)),
                      std::max<int>(model.links[i].parent, static_cast<int>(i)));
    if (root.contains("extra_neighbor_pairs")) {
      for (const json& je : root["extra_neighbor_pairs"]) {
        if (!je.is_array() || je.size() != 2)
          throw ValidationError(model.name + ": extra_neighbor_pairs entries are [a, b]");
        int idx[2];
        for (int s = 0; s < 2; ++s) {
          if (je[s].is_number_integer()) {
            idx[s] = je[s].get<int>();
          } else {
            auto it = std::find(names.begin(), names.end(), je[s].get<std::string>());
            if (it == names.end())
              throw ValidationError(model.name + ": extra_neighbor_pairs references '" +
                                    je[s].get<std::string>() + "'");
            idx[s] = static_cast<int>(it - names.begin());
          }
        }
        pairs.emplace(std::min(idx[0], idx[1]), std::max(idx[0], idx[1]));
      }
    }
    model.neighbor_pairs.assign(pairs.begin(), pairs.end());
  } catch (const json::exception& e) {
    throw ValidationError(origin_name + ": " + e.what());
  }

  model.validate();
  return model;
}

HandModel load_hand(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open hand description: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_hand_json(buffer.str(), path);
}

}  // namespace graspd::hand
