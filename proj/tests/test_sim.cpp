#include <doctest.h>

#include <cmath>
#include <random>

#include "graspd/diff/fd_check.hpp"
#include "graspd/sim/contact.hpp"
#include "graspd/sim/rollout.hpp"

using namespace graspd;
using namespace graspd::sim;

namespace {

// Analytic sphere sampled onto a grid, radius r, centered at the origin.
sdf::SdfGrid sphere_grid(double radius = 0.03, int n = 64, double pad = 0.01) {
  double e = radius + pad;
  return sdf::sample_grid([radius](const Vec3d& p) { return norm(p) - radius; }, {n, n, n},
                          {-e, -e, -e}, {e, e, e});
}

// A flat half-space z <= 0 (phi = z), handy for exact contact values.
sdf::SdfGrid halfspace_grid(int n = 16) {
  return sdf::sample_grid([](const Vec3d& p) { return p.z; }, {n, n, n},
                          {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5});
}

ObjectState unit_object() {
  ObjectState object;
  object.mass = 1.0;
  object.inertia = Mat3d::identity();
  object.bounding_radius = 1.0;
  return object;
}

}  // namespace

TEST_CASE("contact_force: Eq. 4 normal force from 1 mm penetration") {
  sdf::SdfGrid grid = halfspace_grid();
  ContactParams params;  // k_n = 1e6
  Vec3d x{0.0, 0.0, -0.001};
  Vec3d v{0, 0, 0};
  ContactForced cf = contact_force(x, v, grid, params);
  // d = -0.001, grad = (0,0,1): f_n = 1e6 * (-0.001) * (0,0,1) = (0,0,-1000).
  CHECK(std::abs(cf.f_n.z - (-1000.0)) < 1e-9);
  CHECK(std::abs(cf.f_n.x) < 1e-9);
  CHECK(norm(cf.f_t) == 0.0);
}

TEST_CASE("contact_force: no contact means zero force but leaky derivative") {
  sdf::SdfGrid grid = halfspace_grid();
  ContactParams params;
  {
    Tape tape;
    Vec3<Var> x{Var(0.0), Var(0.0), tape.input(0.01)};  // 1 cm above the surface
    Vec3<Var> v{Var(0.0), Var(0.0), Var(0.0)};
    ContactForce<Var> cf = contact_force(x, v, grid, params);
    CHECK(value_of(norm(cf.f_c())) == 0.0);
    // d ||f_n|| / d d = alpha * k_n through the leak.
    Var magnitude = norm(cf.f_n);
    // ||f_n|| has derivative 0 at 0 by the sqrt rule; probe the component.
    Var fz = cf.f_n.z;
    auto adj = tape.backward(fz.idx);
    CHECK(adj[x.z.idx] == doctest::Approx(0.1 * 1e6));  // alpha * k_n = 1e5
    (void)magnitude;
  }
}

TEST_CASE("contact_force: friction cone saturation at mu * |f_n|") {
  sdf::SdfGrid grid = halfspace_grid();
  ContactParams params;
  Vec3d x{0.0, 0.0, -0.001};
  Vec3d v{5.0, 0.0, 0.0};  // large tangential speed: k_f |v_t| >> mu |f_n|
  ContactForced cf = contact_force(x, v, grid, params);
  CHECK(norm(cf.f_n) == doctest::Approx(1000.0));
  CHECK(norm(cf.f_t) == doctest::Approx(800.0));  // mu * 1000, exactly the cone
  CHECK(cf.f_t.x < 0.0);                          // opposes the relative motion
}

TEST_CASE("property: friction never leaves the cone") {
  sdf::SdfGrid grid = sphere_grid();
  ContactParams params;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.04, 0.04);
  std::uniform_real_distribution<double> vel(-2.0, 2.0);
  for (int i = 0; i < 300; ++i) {
    Vec3d x{u(rng), u(rng), u(rng)};
    Vec3d v{vel(rng), vel(rng), vel(rng)};
    ContactForced cf = contact_force(x, v, grid, params);
    CHECK(norm(cf.f_t) <= params.mu * norm(cf.f_n) + 1e-9);
    if (sdf::query(grid, x) >= 0.0) CHECK(norm(cf.f_c()) == 0.0);  // contact sparsity
  }
}

TEST_CASE("contact_force magnitude matches finite differences while penetrating") {
  sdf::SdfGrid grid = sphere_grid();
  ContactParams params;
  auto f = [&](std::span<const Var> v) {
    Vec3<Var> x{v[0], v[1], v[2]};
    Vec3<Var> vel{Var(0.0), Var(0.0), Var(0.0)};
    ContactForce<Var> cf = contact_force(x, vel, grid, params);
    return norm(cf.f_n);
  };
  double x[3] = {0.0, 0.0, 0.028};  // 2 mm penetration near the top
  auto report = diff::finite_difference_check(f, x, 1e-6);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("aggregate_wrench: cross-product identities") {
  std::vector<ContactForced> forces;
  Vec3d com{0, 0, 0};
  Wrenchd w = aggregate_wrench(std::span<const ContactForced>(forces), com);
  CHECK(norm(w.force) == 0.0);
  CHECK(norm(w.torque) == 0.0);

  ContactForced single;
  single.point = {1, 0, 0};
  single.f_n = {0, 0, -1};
  forces.push_back(single);
  w = aggregate_wrench(std::span<const ContactForced>(forces), com);
  CHECK(norm(w.force - Vec3d{0, 0, -1}) < 1e-15);
  CHECK(norm(w.torque - Vec3d{0, 1, 0}) < 1e-15);

  // Equal and opposite forces at symmetric points: pure couple.
  forces.clear();
  ContactForced a, b;
  a.point = {0, 1, 0};
  a.f_n = {1, 0, 0};
  b.point = {0, -1, 0};
  b.f_n = {-1, 0, 0};
  forces = {a, b};
  w = aggregate_wrench(std::span<const ContactForced>(forces), com);
  CHECK(norm(w.force) < 1e-15);
  CHECK(norm(w.torque - Vec3d{0, 0, -2}) < 1e-15);
}

TEST_CASE("euler_step: free motion, impulse, and block-diagonal mass") {
  ObjectState object = unit_object();
  BodyState<double> state = initial_body_state<double>(object, Twistd{{1.0, 0, 0}, {0, 0, 0}});

  // Zero wrench: velocity unchanged, position advances by dt*v.
  auto next = euler_step(state, object.mass, object.inertia, Wrenchd{}, Wrenchd{}, 0.5);
  CHECK(norm(next.velocity.lin - Vec3d{1, 0, 0}) < 1e-15);
  CHECK(norm(next.com - Vec3d{0.5, 0, 0}) < 1e-15);

  // Unit force for dt = 1e-5 on 1 kg: dv = 1e-5.
  Wrenchd push;
  push.force = {1, 0, 0};
  next = euler_step(initial_body_state<double>(object, Twistd{}), object.mass,
                    object.inertia, push, Wrenchd{}, 1e-5);
  CHECK(next.velocity.lin.x == doctest::Approx(1e-5));

  // Pure torque on a spherical inertia: linear velocity untouched.
  Wrenchd twist;
  twist.torque = {0, 0, 2.0};
  next = euler_step(initial_body_state<double>(object, Twistd{}), object.mass,
                    object.inertia, twist, Wrenchd{}, 0.1);
  CHECK(norm(next.velocity.lin) == 0.0);
  CHECK(next.velocity.ang.z == doctest::Approx(0.2));
}

TEST_CASE("rollout_prescribed: zero forces keep velocity; exact cancellation") {
  ObjectState object = unit_object();
  object.mass = 2.5;
  Twistd v0{{0.01, 0.02, -0.01}, {0, 0, 0}};

  std::vector<Wrenchd> none(10);
  auto result = rollout_prescribed<double>(std::span<const Wrenchd>(none), object, v0,
                                           1e-5, 1);
  CHECK(norm(result.final_velocity.lin - v0.lin) < 1e-15);

  // One wrench with force = -m v / dt stops the object in one step.
  std::vector<Wrenchd> stop(1);
  stop[0].force = v0.lin * (-object.mass / 1e-5);
  result = rollout_prescribed<double>(std::span<const Wrenchd>(stop), object, v0, 1e-5, 1);
  CHECK(norm(result.final_velocity.lin) < 1e-12);
  CHECK(norm(result.final_velocity.ang) < 1e-15);
}

TEST_CASE("rollout_prescribed gradients match finite differences") {
  ObjectState object = unit_object();
  object.mass = 0.2;
  Twistd v0{{0.01, 0.01, 0.01}, {0, 0, 0}};
  auto f = [&](std::span<const Var> v) {
    std::vector<Wrench<Var>> wrenches(2);
    wrenches[0].force = {v[0], v[1], v[2]};
    wrenches[0].torque = {v[3], v[4], v[5]};
    wrenches[1].force = {v[6], v[7], v[8]};
    wrenches[1].torque = {v[9], v[10], v[11]};
    auto result = rollout_prescribed<Var>(std::span<const Wrench<Var>>(wrenches), object,
                                          v0, 1e-5, 1);
    return weighted_speed(result.final_velocity, object.bounding_radius);
  };
  double x[12] = {3.0, -2.0, 1.0, 0.1, 0.0, -0.2, -1.0, 0.5, 2.0, 0.0, 0.3, 0.1};
  auto report = diff::finite_difference_check(f, x, 1e-5);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("rollout_actual: far hand leaves velocity unchanged, leak keeps gradient") {
  sdf::SdfGrid grid = sphere_grid();
  ObjectState object = make_object_state(grid, 1000.0);
  ContactParams params;
  Twistd v0{{0.01, 0.01, 0.01}, {0, 0, 0}};

  // A few points far away from the object.
  {
    Tape tape;
    std::vector<Vec3<Var>> points;
    Var zbase = tape.input(0.3);
    for (int i = 0; i < 4; ++i)
      points.push_back({Var(0.01 * i), Var(0.0), zbase + 0.01 * i});
    auto result = rollout_actual<Var>(std::span<const Vec3<Var>>(points), grid, object, v0,
                                      params, 1);
    Var speed = weighted_speed(result.final_velocity, object.bounding_radius);
    CHECK(value_of(speed) == doctest::Approx(norm(v0.lin)));

    auto adj = tape.backward(speed.idx);
    CHECK(adj[zbase.idx] != 0.0);  // gradient leaks through inactive contacts
  }

  // With the leak off the same gradient is exactly zero.
  {
    ContactParams no_leak = params;
    no_leak.alpha = 0.0;
    Tape tape;
    std::vector<Vec3<Var>> points;
    Var zbase = tape.input(0.3);
    for (int i = 0; i < 4; ++i)
      points.push_back({Var(0.01 * i), Var(0.0), zbase + 0.01 * i});
    auto result = rollout_actual<Var>(std::span<const Vec3<Var>>(points), grid, object, v0,
                                      no_leak, 1);
    Var speed = weighted_speed(result.final_velocity, object.bounding_radius);
    auto adj = tape.backward(speed.idx);
    CHECK(adj[zbase.idx] == 0.0);
  }
}

TEST_CASE("rollout_actual: enveloping contact damps the object") {
  sdf::SdfGrid grid = sphere_grid(0.03);
  ObjectState object = make_object_state(grid, 1000.0);
  ContactParams params;
  // Contact impulses must stay below the velocity scale for friction to damp
  // rather than chatter; grasp-like normal forces, not bone-crusher ones.
  params.k_n = 1e4;
  // Ring of penetrating points around the equator plus caps: a crude cage.
  std::vector<Vec3d> points;
  for (int i = 0; i < 12; ++i) {
    double a = 2.0 * M_PI * i / 12;
    points.push_back(Vec3d{0.029 * std::cos(a), 0.029 * std::sin(a), 0.0});
  }
  points.push_back({0, 0, 0.029});
  points.push_back({0, 0, -0.029});

  Twistd v0{{0.01, 0.01, 0.01}, {0, 0, 0}};
  auto result = rollout_actual<double>(std::span<const Vec3d>(points), grid, object, v0,
                                       params, 200);
  double speed0 = norm(v0.lin);
  double speed1 = weighted_speed(result.final_velocity, object.bounding_radius);
  CHECK(speed1 < speed0);
}

TEST_CASE("rollout divergence reports the step index") {
  sdf::SdfGrid grid = sphere_grid(0.03);
  ObjectState object = make_object_state(grid, 1000.0);
  ContactParams params;
  std::vector<Vec3d> points = {{0.0, 0.0, 0.029}};
  Twistd poisoned{{std::numeric_limits<double>::quiet_NaN(), 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(rollout_actual<double>(std::span<const Vec3d>(points), grid, object,
                                         poisoned, params, 10),
                  NumericalError);
  try {
    rollout_actual<double>(std::span<const Vec3d>(points), grid, object, poisoned, params,
                           10);
  } catch (const NumericalError& e) {
    CHECK(e.step_index == 0);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("mass_properties: sphere mass, com, inertia") {
  sdf::SdfGrid grid = sphere_grid(0.03, 80);
  MassProperties props = mass_properties(grid, 1000.0);

  double analytic_mass = 1000.0 * 4.0 / 3.0 * M_PI * std::pow(0.03, 3);
  CHECK(std::abs(props.mass - analytic_mass) / analytic_mass < 0.05);
  CHECK(norm(props.com) < 2 * grid.max_spacing());

  double analytic_inertia = 0.4 * analytic_mass * 0.03 * 0.03;
  for (int a = 0; a < 3; ++a)
    CHECK(std::abs(props.inertia(a, a) - analytic_inertia) / analytic_inertia < 0.10);
  CHECK(props.bounding_radius == doctest::Approx(0.03).epsilon(0.15));

  // A grid with no interior must be rejected.
  sdf::SdfGrid empty = sdf::sample_grid([](const Vec3d&) { return 1.0; }, {8, 8, 8},
                                        {-1, -1, -1}, {1, 1, 1});
  CHECK_THROWS_AS(mass_properties(empty, 1000.0), ValidationError);
}

TEST_CASE("determinism: identical inputs give bit-identical rollouts") {
  sdf::SdfGrid grid = sphere_grid();
  ObjectState object = make_object_state(grid, 1000.0);
  ContactParams params;
  std::vector<Vec3d> points;
  for (int i = 0; i < 20; ++i)
    points.push_back({0.025 * std::cos(i), 0.025 * std::sin(i), 0.001 * i});
  Twistd v0{{0.01, -0.02, 0.005}, {0.1, 0, -0.05}};
  auto r1 = rollout_actual<double>(std::span<const Vec3d>(points), grid, object, v0,
                                   params, 50);
  auto r2 = rollout_actual<double>(std::span<const Vec3d>(points), grid, object, v0,
                                   params, 50);
  CHECK(r1.final_velocity.lin.x == r2.final_velocity.lin.x);
  CHECK(r1.final_velocity.ang.z == r2.final_velocity.ang.z);
  CHECK(r1.final_com.x == r2.final_com.x);
}
