#include "graspd/opt/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "graspd/log.hpp"
#include "graspd/metrics/eval.hpp"

namespace graspd::opt {

namespace {

// Minimum-angle rotation taking unit vector u onto unit vector w.
Quatd quat_between(const Vec3d& u, const Vec3d& w) {
  double c = dot(u, w);
  if (c < -1.0 + 1e-12) {
    Vec3d t1, t2;
    orthonormal_basis(u, t1, t2);
    return Quatd{0.0, t1.x, t1.y, t1.z};  // half-turn about any perpendicular
  }
  Vec3d axis = cross(u, w);
  Quatd q{1.0 + c, axis.x, axis.y, axis.z};
  return q.normalized();
}

}  // namespace

hand::HandPose sample_initial_pose(const hand::HandModel& model, const sdf::SdfGrid& grid,
                                   Rng& rng) {
  // Candidate nodes within one cell of the zero level set.
  std::vector<Vec3d> candidates;
  const auto& dims = grid.dims();
  const double near = grid.max_spacing();
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i)
        if (std::abs(grid.at(i, j, k)) < near)
          candidates.push_back(grid.node_position(i, j, k));
  if (candidates.empty())
    throw ValidationError("sample_initial_pose: grid has no zero level set");

  for (int attempt = 0; attempt < 100; ++attempt) {
    Vec3d x = grid.pose().apply(candidates[rng.index(candidates.size())]);
    // Project onto the surface (two Newton steps are plenty at node distance).
    for (int it = 0; it < 2; ++it) {
      Vec3d g = sdf::grad(grid, x);
      double gn = norm(g);
      if (gn < 1e-6) break;
      x -= g * (sdf::query(grid, x) / gn);
    }
    Vec3d g = sdf::grad(grid, x);
    double gn = norm(g);
    if (gn < 1e-6) continue;  // degenerate normal: resample
    Vec3d n = g / gn;                 // outward surface normal
    Vec3d approach = -n;              // palm looks along this vector

    hand::HandPose pose = hand::open_pose(model);
    auto fk0 = hand::forward_kinematics<double>(model, pose);
    const Transformd& palm0 = fk0.link_world[model.palm.link];
    Vec3d palm_center0 = palm0.apply(model.palm.center);
    Vec3d palm_normal0 = palm0.apply_vector(model.palm.normal);

    Quatd align = quat_between(palm_normal0, approach);
    Quatd roll = quat_from_axis_angle(approach, rng.uniform(0.0, 2.0 * M_PI));
    Quatd rotation = (roll * align).normalized();

    Vec3d target_center = x + n * 0.10;
    pose.base_rotation = rotation;
    pose.base_position = target_center - rotation.rotate(palm_center0);
    return pose;
  }
  throw NumericalError("sample_initial_pose: no usable surface normal in 100 attempts");
}

double smoothing_radius(int step, double init_r, const OptimizerConfig& config) {
  if (step < 0 || (config.steps > 0 && step >= config.steps))
    throw ValidationError("smoothing_radius: step out of range");
  double f = 1.0 - static_cast<double>(step) / config.smoothing_steps;
  return init_r * std::max(0.0, f);
}

double initial_smoothing_radius(const hand::HandModel& model, const hand::HandPose& pose,
                                const sdf::SdfGrid& grid, double cap) {
  auto fk = hand::forward_kinematics<double>(model, pose);
  double closest = std::numeric_limits<double>::max();
  for (const Vec3d& x : fk.points) closest = std::min(closest, sdf::query(grid, x));
  double r = std::max(0.0, closest - 0.01);
  return std::min(r, cap);
}

void Adamax::step(std::vector<double>& params, const std::vector<double>& grad,
                  const std::vector<double>& lr) {
  if (params.size() != m_.size() || grad.size() != m_.size() || lr.size() != m_.size())
    throw ValidationError("Adamax::step: size mismatch");
  ++t_;
  const double bias = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    u_[i] = std::max(beta2_ * u_[i], std::abs(grad[i]));
    params[i] -= lr[i] / bias * m_[i] / (u_[i] + eps_);
  }
}

SynthesisResult synthesize(const hand::HandModel& model, const sdf::SdfGrid& grid,
                           const sim::ObjectState& object, const sim::ContactParams& params,
                           const loss::LossSettings& loss_settings,
                           const OptimizerConfig& config) {
  config.validate();
  params.validate();
  object.validate();
  model.validate();

  loss::LossSettings settings = loss_settings;
  settings.relaxation = config.relaxation;

  Rng rng(config.seed);
  hand::HandPose pose = sample_initial_pose(model, grid, rng);

  const std::size_t n_points = model.num_surface_points();
  const std::size_t n_rollouts = settings.velocities.size();
  const std::size_t n_joints = model.num_joints();
  const std::size_t n_force_params = config.relaxation ? 6 * n_rollouts * n_points : 0;
  const std::size_t n_params = 6 + n_joints + n_force_params;

  // Layout: [base position, base rotation increment, joints, wrenches].
  std::vector<double> values(n_params, 0.0);
  values[0] = pose.base_position.x;
  values[1] = pose.base_position.y;
  values[2] = pose.base_position.z;
  for (std::size_t j = 0; j < n_joints; ++j) values[6 + j] = pose.joints[j];
  Quatd base_quat = pose.base_rotation;

  std::vector<double> lr(n_params, config.lr_pose);
  std::fill(lr.begin() + 6 + n_joints, lr.end(), config.lr_forces);

  Adamax adamax(n_params, config.beta1, config.beta2, config.epsilon);
  MultiplierState lambda_task, lambda_limit;

  const double init_r =
      config.smoothing ? initial_smoothing_radius(model, pose, grid) : 0.0;
  auto plan = loss::SelfIntersectionPlan::build(model);

  SynthesisResult result;
  result.trace.reserve(config.steps);

  auto snapshot = [&]() {
    loss::GraspCandidate c;
    c.pose.base_position = {values[0], values[1], values[2]};
    c.pose.base_rotation = base_quat;
    c.pose.joints.assign(values.begin() + 6, values.begin() + 6 + n_joints);
    c.prescribed.resize(config.relaxation ? n_rollouts * n_points : 0);
    for (std::size_t w = 0; w < c.prescribed.size(); ++w) {
      const double* base = values.data() + 6 + n_joints + 6 * w;
      c.prescribed[w].force = {base[0], base[1], base[2]};
      c.prescribed[w].torque = {base[3], base[4], base[5]};
    }
    return c;
  };

  // Checkpoints in the post-smoothing tail get a full displacement ranking.
  std::vector<int> checkpoints;
  if (config.steps > 0) {
    const int tail_begin = config.smoothing ? config.smoothing_steps : config.steps / 2;
    for (int e = 1; e <= config.eval_candidates; ++e) {
      int s = tail_begin + (config.steps - tail_begin) * e / config.eval_candidates;
      s = std::min(s, config.steps);
      if (checkpoints.empty() || checkpoints.back() != s) checkpoints.push_back(s);
    }
  } else {
    checkpoints.push_back(0);
  }
  std::vector<std::pair<int, loss::GraspCandidate>> snapshots;

  Tape tape;
  std::vector<double> adjoints;
  std::vector<double> grad(n_params, 0.0);
  std::vector<Var> vars(n_params);

  sim::ContactParams step_params = params;
  if (!config.leak) step_params.alpha = 0.0;

  int step = 0;
  for (; step < config.steps; ++step) {
    step_params.offset = sdf::LevelSetOffset(
        config.smoothing ? smoothing_radius(step, init_r, config) : 0.0);

    tape.clear();
    for (std::size_t i = 0; i < n_params; ++i) vars[i] = tape.input(values[i]);
    // Base rotation: local increment (value 0) composed onto the stored
    // quaternion, so orientation gradients avoid normalization terms.
    Vec3<Var> rot_incr{vars[3], vars[4], vars[5]};
    Quat<Var> q = quat_exp(rot_incr) * to_quat<Var>(base_quat);
    Transform<Var> base{q.to_mat3(), Vec3<Var>{vars[0], vars[1], vars[2]}};

    std::vector<Var> joints(vars.begin() + 6, vars.begin() + 6 + n_joints);
    std::vector<sim::Wrench<Var>> prescribed(config.relaxation ? n_rollouts * n_points : 0);
    for (std::size_t w = 0; w < prescribed.size(); ++w) {
      const Var* basep = vars.data() + 6 + n_joints + 6 * w;
      prescribed[w].force = {basep[0], basep[1], basep[2]};
      prescribed[w].torque = {basep[3], basep[4], basep[5]};
    }

    loss::LossTerms<Var> terms;
    try {
      terms = loss::evaluate_losses<Var>(model, plan, grid, object, step_params, settings,
                                         base, std::span<const Var>(joints),
                                         std::span<const sim::Wrench<Var>>(prescribed));
    } catch (const NumericalError& e) {
      result.diverged = true;
      result.warning = std::string("step ") + std::to_string(step) + ": " + e.what();
      log::warn("synthesize: %s", result.warning.c_str());
      break;
    }

    loss::LossReport report;
    report.task = terms.task.v;
    report.physics = terms.physics.v;
    report.qrange = terms.qrange.v;
    report.qlimit = terms.qlimit.v;
    report.inter = terms.inter.v;
    report.lambda_task = lambda_task.lambda;
    report.lambda_limit = lambda_limit.lambda;
    result.trace.push_back(report);
    if (!report.finite()) {
      result.diverged = true;
      result.warning = "non-finite loss at step " + std::to_string(step);
      log::warn("synthesize: %s", result.warning.c_str());
      break;
    }

    Var objective = terms.qrange + terms.inter +
                    Var(lambda_limit.lambda) * (terms.qlimit - config.c_limit);
    if (config.relaxation) {
      objective += terms.physics;
      objective += Var(lambda_task.lambda) * (terms.task - config.c_task);
    } else {
      objective += terms.task;  // the direct simulation metric
    }

    tape.backward(objective.idx, adjoints);
    bool finite = true;
    for (std::size_t i = 0; i < n_params; ++i) {
      grad[i] = adjoints[vars[i].idx];
      finite = finite && std::isfinite(grad[i]);
    }
    if (!finite) {
      result.diverged = true;
      result.warning = "non-finite gradient at step " + std::to_string(step);
      log::warn("synthesize: %s", result.warning.c_str());
      break;
    }

    adamax.step(values, grad, lr);

    // Consume the rotation increment.
    Vec3d dr{values[3], values[4], values[5]};
    base_quat = (quat_exp(dr) * base_quat).normalized();
    values[3] = values[4] = values[5] = 0.0;

    // Damped multiplier ascent on the constraint violations.
    if (config.relaxation)
      lambda_task.update(report.task - config.c_task, config.lr_multiplier, config.damping);
    lambda_limit.update(report.qlimit - config.c_limit, config.lr_multiplier,
                        config.damping);

    if (!checkpoints.empty() && step + 1 == checkpoints.front()) {
      snapshots.emplace_back(step + 1, snapshot());
      checkpoints.erase(checkpoints.begin());
    }
  }

  if (snapshots.empty() || snapshots.back().first != step)
    snapshots.emplace_back(step, snapshot());

  // Rank the checkpoints by the shake test and keep the best.
  sim::ContactParams eval_params = params;
  eval_params.offset = sdf::LevelSetOffset(0.0);
  for (auto& [snap_step, candidate] : snapshots) {
    double d = metrics::displacement_test(model, candidate.pose, grid, object, eval_params);
    log::debug("synthesize seed %llu: checkpoint %d displacement %.3f cm",
               static_cast<unsigned long long>(config.seed), snap_step, d);
    if (d < result.displacement_cm ||
        (d == result.displacement_cm && snap_step > result.best_step)) {
      result.displacement_cm = d;
      result.best_step = snap_step;
      result.candidate = candidate;
    }
  }
  if (!std::isfinite(result.displacement_cm) && !snapshots.empty()) {
    // All checkpoints diverged in evaluation; still return the last state.
    result.candidate = snapshots.back().second;
    result.best_step = snapshots.back().first;
  }
  return result;
}

}  // namespace graspd::opt
