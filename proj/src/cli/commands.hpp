#pragma once

// Subcommand implementations behind the graspd binary; each returns a process
// exit code (0 ok, 1 I/O, 2 validation, 3 numerical failure) so they can be
// driven directly from tests.

#include <cstdint>
#include <string>
#include <vector>

#include "graspd/loss/losses.hpp"
#include "graspd/opt/optimizer.hpp"

namespace graspd::cli {

constexpr const char* kToolVersion = "0.1.0";

enum ExitCode { kOk = 0, kIoFailure = 1, kValidationFailure = 2, kNumericalFailure = 3 };

// Everything cmd_synth needs beyond the CLI paths: optimizer settings plus
// contact/object/velocity configuration, loadable from one JSON file.
struct RunConfig {
  opt::OptimizerConfig optimizer;
  sim::ContactParams contact;
  loss::LossSettings losses;
  double density = 1000.0;  // kg/m^3

  static RunConfig load(const std::string& path);
  static RunConfig from_json_text(const std::string& text, const std::string& origin);
};

struct BakeArgs {
  std::string mesh_path;
  std::string out_path;
  int dims = 256;
  double padding = 0.01;
};
int cmd_bake(const BakeArgs& args);

struct SynthArgs {
  std::string hand_path;
  std::string sdf_path;
  std::string config_path;  // optional; defaults when empty
  std::string out_dir;
  int seeds = 10;
  int jobs = 1;
};
int cmd_synth(const SynthArgs& args);

struct EvalArgs {
  std::vector<std::string> grasp_files;
  std::string hand_path;
  std::string sdf_path;
  std::string out_path;  // JSON-lines; "-" = stdout only
};
int cmd_eval(const EvalArgs& args);

struct ExportArgs {
  std::string grasp_path;
  std::string hand_path;
  std::string sdf_path;
  std::string out_path;
};
int cmd_export(const ExportArgs& args);

// Grasp files round-trip through these.
struct GraspFile {
  std::string hand_name;
  std::uint64_t seed = 0;
  loss::GraspCandidate candidate;
  loss::LossReport final_losses;
  double displacement_cm = 0.0;
  int best_step = -1;
  bool diverged = false;
  std::string warning;
};
void save_grasp(const std::string& path, const GraspFile& grasp);
GraspFile load_grasp(const std::string& path);

std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace graspd::cli
