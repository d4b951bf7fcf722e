#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "graspd/log.hpp"
#include "graspd/metrics/eval.hpp"
#include "graspd/sdf/bake.hpp"
#include "graspd/sdf/io.hpp"
#include "graspd/sdf/surface.hpp"

namespace graspd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_guarded(const char* what, const std::function<int()>& body) {
  try {
    return body();
  } catch (const IoError& e) {
    log::error("%s: %s", what, e.what());
    return kIoFailure;
  } catch (const ValidationError& e) {
    log::error("%s: %s", what, e.what());
    return kValidationFailure;
  } catch (const NumericalError& e) {
    log::error("%s: %s", what, e.what());
    return kNumericalFailure;
  } catch (const std::exception& e) {
    log::error("%s: unexpected error: %s", what, e.what());
    return kNumericalFailure;
  }
}

json vec3_to_json(const Vec3d& v) { return json::array({v.x, v.y, v.z}); }

Vec3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": invalid JSON: " + e.what());
  }
  RunConfig config;
  try {
    auto& o = config.optimizer;
    o.steps = j.value("steps", o.steps);
    o.lr_pose = j.value("lr_pose", o.lr_pose);
    o.lr_forces = j.value("lr_forces", o.lr_forces);
    o.c_task = j.value("c_task", o.c_task);
    o.c_limit = j.value("c_limit", o.c_limit);
    o.damping = j.value("damping", o.damping);
    o.smoothing_steps = j.value("smoothing_steps", o.smoothing_steps);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.epsilon = j.value("epsilon", o.epsilon);
    o.seed = j.value("seed", o.seed);
    o.lr_multiplier = j.value("lr_multiplier", o.lr_multiplier);
    o.relaxation = j.value("relaxation", o.relaxation);
    o.smoothing = j.value("smoothing", o.smoothing);
    o.leak = j.value("leak", o.leak);
    o.eval_candidates = j.value("eval_candidates", o.eval_candidates);

    if (j.contains("contact")) {
      const json& c = j["contact"];
      config.contact.k_n = c.value("k_n", config.contact.k_n);
      config.contact.k_f = c.value("k_f", config.contact.k_f);
      config.contact.mu = c.value("mu", config.contact.mu);
      config.contact.alpha = c.value("alpha", config.contact.alpha);
      config.contact.dt = c.value("dt", config.contact.dt);
    }
    if (j.contains("object")) config.density = j["object"].value("density", config.density);
    if (j.contains("velocities")) {
      config.losses.velocities.items.clear();
      for (const json& jv : j["velocities"]) {
        sim::Twistd t;
        if (jv.is_array() && jv.size() == 3 && jv[0].is_number()) {
          t.lin = vec3_from_json(jv);
        } else {
          t.lin = vec3_from_json(jv.at("lin"));
          if (jv.contains("ang")) t.ang = vec3_from_json(jv["ang"]);
        }
        config.losses.velocities.items.push_back(t);
      }
      if (config.losses.velocities.items.empty())
        throw ValidationError(origin + ": velocity set must not be empty");
    }
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  config.optimizer.validate();
  config.contact.validate();
  config.losses.relaxation = config.optimizer.relaxation;
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str(), path);
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

static std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// --- grasp files ------------------------------------------------------------

void save_grasp(const std::string& path, const GraspFile& grasp) {
  json j;
  j["hand"] = grasp.hand_name;
  j["seed"] = grasp.seed;
  j["pose"]["position"] = vec3_to_json(grasp.candidate.pose.base_position);
  const Quatd& q = grasp.candidate.pose.base_rotation;
  j["pose"]["rotation_wxyz"] = json::array({q.w, q.x, q.y, q.z});
  j["pose"]["joints"] = grasp.candidate.pose.joints;
  json wrenches = json::array();
  for (const sim::Wrenchd& w : grasp.candidate.prescribed)
    wrenches.push_back(json::array(
        {w.force.x, w.force.y, w.force.z, w.torque.x, w.torque.y, w.torque.z}));
  j["prescribed"] = std::move(wrenches);
  j["losses"] = {{"task", grasp.final_losses.task},
                 {"physics", grasp.final_losses.physics},
                 {"qrange", grasp.final_losses.qrange},
                 {"qlimit", grasp.final_losses.qlimit},
                 {"inter", grasp.final_losses.inter},
                 {"lambda_task", grasp.final_losses.lambda_task},
                 {"lambda_limit", grasp.final_losses.lambda_limit}};
  j["displacement_cm"] = std::isfinite(grasp.displacement_cm)
                             ? json(grasp.displacement_cm)
                             : json("inf");
  j["best_step"] = grasp.best_step;
  j["diverged"] = grasp.diverged;
  if (!grasp.warning.empty()) j["warning"] = grasp.warning;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write grasp file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed while writing grasp file: " + path);
}

GraspFile load_grasp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grasp file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  GraspFile grasp;
  try {
    grasp.hand_name = j.value("hand", "");
    grasp.seed = j.value("seed", 0ULL);
    grasp.candidate.pose.base_position = vec3_from_json(j.at("pose").at("position"));
    const json& jq = j.at("pose").at("rotation_wxyz");
    grasp.candidate.pose.base_rotation =
        Quatd{jq.at(0).get<double>(), jq.at(1).get<double>(), jq.at(2).get<double>(),
              jq.at(3).get<double>()};
    grasp.candidate.pose.joints = j.at("pose").at("joints").get<std::vector<double>>();
    for (const json& jw : j.value("prescribed", json::array())) {
      sim::Wrenchd w;
      w.force = {jw.at(0).get<double>(), jw.at(1).get<double>(), jw.at(2).get<double>()};
      w.torque = {jw.at(3).get<double>(), jw.at(4).get<double>(), jw.at(5).get<double>()};
      grasp.candidate.prescribed.push_back(w);
    }
    if (j.contains("losses")) {
      const json& jl = j["losses"];
      grasp.final_losses.task = jl.value("task", 0.0);
      grasp.final_losses.physics = jl.value("physics", 0.0);
      grasp.final_losses.qrange = jl.value("qrange", 0.0);
      grasp.final_losses.qlimit = jl.value("qlimit", 0.0);
      grasp.final_losses.inter = jl.value("inter", 0.0);
    }
    if (j.contains("displacement_cm") && j["displacement_cm"].is_number())
      grasp.displacement_cm = j["displacement_cm"].get<double>();
    else
      grasp.displacement_cm = std::numeric_limits<double>::infinity();
    grasp.best_step = j.value("best_step", -1);
    grasp.diverged = j.value("diverged", false);
    grasp.warning = j.value("warning", "");
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return grasp;
}

// --- bake -------------------------------------------------------------------

int cmd_bake(const BakeArgs& args) {
  return run_guarded("bake", [&]() {
    if (args.dims < 2 || args.dims > 1024)
      throw ValidationError("bake: --dims must be in [2, 1024]");
    if (args.padding <= 0.0) throw ValidationError("bake: --padding must be positive");
    sdf::TriMesh mesh = sdf::load_obj(args.mesh_path);
    sdf::BakeOptions options;
    options.dims = {args.dims, args.dims, args.dims};
    options.padding = args.padding;
    sdf::SdfGrid grid = sdf::bake(mesh, options);
    sdf::write_gsdf(args.out_path, grid);

    double mn = grid.values()[0], mx = grid.values()[0];
    for (double v : grid.values()) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    std::printf("baked %s: dims %d^3, spacing %.6f m, phi range [%.6f, %.6f] m\n",
                args.out_path.c_str(), args.dims, grid.max_spacing(), mn, mx);
    return kOk;
  });
}

// --- synth --------------------------------------------------------------

int cmd_synth(const SynthArgs& args) {
  return run_guarded("synth", [&]() {
    if (args.seeds < 0) throw ValidationError("synth: --seeds must be >= 0");
    int jobs = std::max(1, args.jobs);
    hand::HandModel model = hand::load_hand(args.hand_path);
    sdf::SdfGrid grid = sdf::read_gsdf(args.sdf_path);
    RunConfig config =
        args.config_path.empty() ? RunConfig{} : RunConfig::load(args.config_path);
    sim::ObjectState object = sim::make_object_state(grid, config.density);

    fs::create_directories(args.out_dir);

    struct JobOutcome {
      std::string file;
      std::uint64_t seed_value = 0;
      double displacement_cm = std::numeric_limits<double>::infinity();
      bool ok = false;
      std::string warning;
      loss::LossReport losses;
    };
    std::vector<JobOutcome> outcomes(args.seeds);

    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= args.seeds) return;
        JobOutcome& outcome = outcomes[i];
        opt::OptimizerConfig oc = config.optimizer;
        // Stable per-job stream: mix the base seed with the job index.
        oc.seed = opt::job_rng(config.optimizer.seed, static_cast<std::uint64_t>(i))
                      .next_u64();
        outcome.seed_value = oc.seed;
        char name[64];
        std::snprintf(name, sizeof(name), "grasp_%03d.json", i);
        outcome.file = name;
        try {
          opt::SynthesisResult result =
              opt::synthesize(model, grid, object, config.contact, config.losses, oc);
          GraspFile grasp;
          grasp.hand_name = model.name;
          grasp.seed = oc.seed;
          grasp.candidate = result.candidate;
          grasp.final_losses = result.trace.empty() ? loss::LossReport{} : result.trace.back();
          grasp.displacement_cm = result.displacement_cm;
          grasp.best_step = result.best_step;
          grasp.diverged = result.diverged;
          grasp.warning = result.warning;
          save_grasp((fs::path(args.out_dir) / name).string(), grasp);
          outcome.displacement_cm = result.displacement_cm;
          outcome.losses = grasp.final_losses;
          outcome.warning = result.warning;
          outcome.ok = !result.diverged;
          log::info("seed %d: displacement %.3f cm, task %.3g", i,
                    result.displacement_cm, grasp.final_losses.task);
        } catch (const std::exception& e) {
          outcome.ok = false;
          outcome.warning = e.what();
          log::warn("seed %d failed: %s", i, e.what());
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(jobs, std::max(1, args.seeds)); ++t)
      pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // Manifest with input hashes and a displacement ranking.
    json manifest;
    manifest["tool"] = "graspd";
    manifest["version"] = kToolVersion;
    manifest["hand"] = {{"path", args.hand_path},
                        {"fnv1a64", hex64(fnv1a64_file(args.hand_path))}};
    manifest["sdf"] = {{"path", args.sdf_path},
                       {"fnv1a64", hex64(fnv1a64_file(args.sdf_path))}};
    if (!args.config_path.empty())
      manifest["config"] = {{"path", args.config_path},
                            {"fnv1a64", hex64(fnv1a64_file(args.config_path))}};
    manifest["seeds"] = args.seeds;
    manifest["jobs"] = jobs;
    json jgrasps = json::array();
    for (const JobOutcome& outcome : outcomes) {
      json jg;
      jg["file"] = outcome.file;
      jg["seed_value"] = outcome.seed_value;
      jg["status"] = outcome.ok ? "ok" : "failed";
      jg["displacement_cm"] = std::isfinite(outcome.displacement_cm)
                                  ? json(outcome.displacement_cm)
                                  : json("inf");
      jg["task_loss"] = outcome.losses.task;
      if (!outcome.warning.empty()) jg["warning"] = outcome.warning;
      jgrasps.push_back(jg);
    }
    manifest["grasps"] = std::move(jgrasps);

    std::vector<int> order(outcomes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (outcomes[a].displacement_cm != outcomes[b].displacement_cm)
        return outcomes[a].displacement_cm < outcomes[b].displacement_cm;
      return a < b;
    });
    json ranked = json::array();
    for (int i : order)
      if (outcomes[i].ok) ranked.push_back(outcomes[i].file);
    manifest["ranked"] = std::move(ranked);

    std::ofstream out(fs::path(args.out_dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest");
    out << manifest.dump(2) << '\n';

    int succeeded = 0;
    for (const JobOutcome& o : outcomes) succeeded += o.ok ? 1 : 0;
    std::printf("synth: %d/%d seeds succeeded, results in %s\n", succeeded, args.seeds,
                args.out_dir.c_str());
    if (args.seeds > 0 && succeeded == 0) return kNumericalFailure;
    return kOk;
  });
}

// --- eval ---------------------------------------------------------------

int cmd_eval(const EvalArgs& args) {
  return run_guarded("eval", [&]() {
    hand::HandModel model = hand::load_hand(args.hand_path);
    sdf::SdfGrid grid = sdf::read_gsdf(args.sdf_path);
    sim::ObjectState object = sim::make_object_state(grid, 1000.0);
    sim::ContactParams params;

    struct Row {
      std::string file;
      metrics::EvalReport report;
    };
    std::vector<Row> rows;
    std::vector<std::string> missing;
    for (const std::string& file : args.grasp_files) {
      try {
        GraspFile grasp = load_grasp(file);
        if (grasp.candidate.pose.joints.size() != model.num_joints())
          throw ValidationError(file + ": joint count does not match hand");
        metrics::EvalReport report =
            metrics::evaluate_grasp(model, grasp.candidate.pose, grid, object, params);
        rows.push_back({file, report});
      } catch (const std::exception& e) {
        log::warn("eval: skipping %s: %s", file.c_str(), e.what());
        missing.push_back(file);
      }
    }
    if (!missing.empty()) {
      std::fprintf(stderr, "eval: skipped %zu file(s):", missing.size());
      for (const std::string& m : missing) std::fprintf(stderr, " %s", m.c_str());
      std::fputc('\n', stderr);
    }
    if (rows.empty()) return kIoFailure;

    std::ostringstream lines;
    for (const Row& row : rows) {
      nlohmann::json j = nlohmann::json::parse(metrics::to_json_line(row.report));
      j["file"] = row.file;
      lines << j.dump() << '\n';
    }

    // Top-k aggregates by displacement.
    std::vector<const Row*> byd;
    for (const Row& row : rows) byd.push_back(&row);
    std::sort(byd.begin(), byd.end(), [](const Row* a, const Row* b) {
      return a->report.displacement_cm < b->report.displacement_cm;
    });
    auto aggregate = [&](std::size_t k) {
      k = std::min(k, byd.size());
      metrics::EvalReport mean;
      double ratio_sum = 0.0;
      int ratio_count = 0;
      for (std::size_t i = 0; i < k; ++i) {
        mean.contact_area_cm2 += byd[i]->report.contact_area_cm2;
        mean.interpen_volume_cm3 += byd[i]->report.interpen_volume_cm3;
        mean.epsilon += byd[i]->report.epsilon;
        mean.displacement_cm += byd[i]->report.displacement_cm;
        mean.contact_count += byd[i]->report.contact_count;
        if (byd[i]->report.ratio_cm_inv) {
          ratio_sum += *byd[i]->report.ratio_cm_inv;
          ++ratio_count;
        }
      }
      nlohmann::json j;
      j["aggregate"] = "top" + std::to_string(k);
      j["count"] = k;
      if (k > 0) {
        j["contact_area_cm2"] = mean.contact_area_cm2 / k;
        j["interpen_volume_cm3"] = mean.interpen_volume_cm3 / k;
        j["epsilon"] = mean.epsilon / k;
        j["displacement_cm"] = mean.displacement_cm / k;
        j["contact_count"] = double(mean.contact_count) / k;
        if (ratio_count > 0) j["ratio_cm_inv"] = ratio_sum / ratio_count;
      }
      return j;
    };
    lines << aggregate(2).dump() << '\n' << aggregate(5).dump() << '\n';

    std::fputs(lines.str().c_str(), stdout);
    if (!args.out_path.empty() && args.out_path != "-") {
      std::ofstream out(args.out_path);
      if (!out) throw IoError("cannot write eval output: " + args.out_path);
      out << lines.str();
    }
    return kOk;
  });
}

// --- export -------------------------------------------------------------

namespace {

sdf::TriMesh tessellate_primitive(const sdf::Primitive& prim) {
  using sdf::PrimitiveKind;
  if (prim.kind == PrimitiveKind::kSphere) {
    sdf::TriMesh m = sdf::make_icosphere(prim.radius, 2);
    for (Vec3d& v : m.vertices) v += prim.center;
    return m;
  }
  if (prim.kind == PrimitiveKind::kBox) {
    sdf::TriMesh m = sdf::make_box_mesh(prim.half);
    for (Vec3d& v : m.vertices) v += prim.center;
    return m;
  }
  // Capsule: ring sweep along the axis with hemispherical caps.
  const int segments = 12, cap_rings = 4;
  Vec3d axis = prim.b - prim.a;
  double length = norm(axis);
  Vec3d z = length > 1e-12 ? axis / length : Vec3d{0, 0, 1};
  Vec3d t1, t2;
  orthonormal_basis(z, t1, t2);
  sdf::TriMesh m;
  std::vector<double> station;  // parameter along the capsule, with cap angles
  // Bottom pole to bottom equator, straight side, top equator to top pole.
  std::vector<Vec3d> rows;
  auto ring_center = [&](double t) { return prim.a + z * (t * length); };
  // Bottom cap.
  for (int r = cap_rings; r >= 1; --r) {
    double ang = M_PI / 2.0 * r / cap_rings;
    double rr = prim.radius * std::sin(ang);
    double zz = -prim.radius * std::cos(ang);
    rows.push_back(prim.a + z * zz);
    station.push_back(rr);
  }
  // Side.
  rows.push_back(prim.a);
  station.push_back(prim.radius);
  rows.push_back(prim.b);
  station.push_back(prim.radius);
  // Top cap.
  for (int r = 1; r <= cap_rings; ++r) {
    double ang = M_PI / 2.0 * r / cap_rings;
    double rr = prim.radius * std::cos(ang);
    double zz = prim.radius * std::sin(ang);
    rows.push_back(prim.b + z * zz);
    station.push_back(rr);
  }
  (void)ring_center;

  int bottom_pole = 0, top_pole = 0;
  m.vertices.push_back(prim.a - z * prim.radius);
  bottom_pole = 0;
  std::vector<int> first_of_row;
  for (std::size_t row = 0; row < rows.size(); ++row) {
    first_of_row.push_back(static_cast<int>(m.vertices.size()));
    for (int s = 0; s < segments; ++s) {
      double ang = 2.0 * M_PI * s / segments;
      m.vertices.push_back(rows[row] +
                           (t1 * std::cos(ang) + t2 * std::sin(ang)) * station[row]);
    }
  }
  m.vertices.push_back(prim.b + z * prim.radius);
  top_pole = static_cast<int>(m.vertices.size()) - 1;

  auto ring_vertex = [&](std::size_t row, int s) {
    return first_of_row[row] + (s % segments);
  };
  for (int s = 0; s < segments; ++s)
    m.faces.push_back({bottom_pole, ring_vertex(0, s + 1), ring_vertex(0, s)});
  for (std::size_t row = 0; row + 1 < rows.size(); ++row) {
    for (int s = 0; s < segments; ++s) {
      int a0 = ring_vertex(row, s), a1 = ring_vertex(row, s + 1);
      int b0 = ring_vertex(row + 1, s), b1 = ring_vertex(row + 1, s + 1);
      m.faces.push_back({a0, a1, b1});
      m.faces.push_back({a0, b1, b0});
    }
  }
  for (int s = 0; s < segments; ++s)
    m.faces.push_back({top_pole, ring_vertex(rows.size() - 1, s),
                       ring_vertex(rows.size() - 1, s + 1)});
  return m;
}

}  // namespace

int cmd_export(const ExportArgs& args) {
  return run_guarded("export", [&]() {
    hand::HandModel model = hand::load_hand(args.hand_path);
    sdf::SdfGrid grid = sdf::read_gsdf(args.sdf_path);
    GraspFile grasp = load_grasp(args.grasp_path);
    if (grasp.candidate.pose.joints.size() != model.num_joints())
      throw ValidationError(args.grasp_path + ": joint count does not match hand");

    sdf::TriMesh scene;
    std::vector<std::pair<std::string, std::size_t>> groups;
    groups.emplace_back("hand", 0);
    auto fk = hand::forward_kinematics<double>(model, grasp.candidate.pose);
    for (std::size_t l = 0; l < model.links.size(); ++l) {
      for (const sdf::Primitive& prim : model.links[l].primitives) {
        sdf::TriMesh part = tessellate_primitive(prim);
        int base = static_cast<int>(scene.vertices.size());
        for (const Vec3d& v : part.vertices)
          scene.vertices.push_back(fk.link_world[l].apply(v));
        for (const auto& f : part.faces)
          scene.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
      }
    }

    groups.emplace_back("object", scene.faces.size());
    sdf::TriMesh object = sdf::extract_level_set(grid, 0.0);
    if (object.faces.empty()) {
      log::warn("export: grid has no zero level set; object group left empty");
    } else {
      int base = static_cast<int>(scene.vertices.size());
      for (const Vec3d& v : object.vertices) scene.vertices.push_back(v);
      for (const auto& f : object.faces)
        scene.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    }

    sdf::save_obj(args.out_path, scene, groups);
    std::printf("exported %s: %zu vertices, %zu faces\n", args.out_path.c_str(),
                scene.vertices.size(), scene.faces.size());
    return kOk;
  });
}

}  // namespace graspd::cli
