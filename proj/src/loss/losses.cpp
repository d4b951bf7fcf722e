#include "graspd/loss/losses.hpp"

namespace graspd::loss {

SelfIntersectionPlan SelfIntersectionPlan::build(const hand::HandModel& model) {
  SelfIntersectionPlan plan;
  const int n = static_cast<int>(model.links.size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (!model.are_neighbors(a, b)) plan.pairs.emplace_back(a, b);

  plan.bounds.resize(n);
  for (int l = 0; l < n; ++l) {
    const hand::Link& link = model.links[l];
    LinkBound& bound = plan.bounds[l];
    if (link.surface_points.empty() && link.primitives.empty()) continue;
    // Center on the average feature position, then take the max reach.
    Vec3d center{0, 0, 0};
    int count = 0;
    for (const Vec3d& p : link.surface_points) {
      center += p;
      ++count;
    }
    for (const sdf::Primitive& prim : link.primitives) {
      center += prim.bound_center();
      ++count;
    }
    center = center / double(count);
    double radius = 0.0;
    for (const Vec3d& p : link.surface_points)
      radius = std::max(radius, norm(p - center));
    for (const sdf::Primitive& prim : link.primitives)
      radius = std::max(radius, norm(prim.bound_center() - center) + prim.bound_radius());
    bound.center = center;
    bound.radius = radius;
    bound.empty = false;
  }
  return plan;
}

LossReport total_report(const hand::HandModel& model, const sdf::SdfGrid& grid,
                        const sim::ObjectState& object, const sim::ContactParams& params,
                        const LossSettings& settings, const GraspCandidate& candidate) {
  SelfIntersectionPlan plan = SelfIntersectionPlan::build(model);
  std::vector<double> joints(candidate.pose.joints.begin(), candidate.pose.joints.end());
  Transformd base = candidate.pose.base_transform();
  auto terms = evaluate_losses<double>(model, plan, grid, object, params, settings, base,
                                       std::span<const double>(joints),
                                       std::span<const sim::Wrenchd>(candidate.prescribed));
  LossReport report;
  report.task = terms.task;
  report.physics = terms.physics;
  report.qrange = terms.qrange;
  report.qlimit = terms.qlimit;
  report.inter = terms.inter;
  if (!report.finite()) throw NumericalError("total_report: non-finite loss");
  return report;
}

}  // namespace graspd::loss
