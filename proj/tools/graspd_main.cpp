// graspd: SDF baking, grasp synthesis, evaluation and scene export.

#include <CLI11.hpp>

#include "../src/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Differentiable contact-rich grasp synthesis"};
  app.require_subcommand(1);

  graspd::cli::BakeArgs bake;
  CLI::App* cmd_bake = app.add_subcommand("bake", "Bake an OBJ mesh into an SDF grid file");
  cmd_bake->add_option("mesh", bake.mesh_path, "watertight ASCII OBJ mesh")->required();
  cmd_bake->add_option("--out", bake.out_path, "output GSDF path")->required();
  cmd_bake->add_option("--dims", bake.dims, "grid nodes per axis (default 256)");
  cmd_bake->add_option("--padding", bake.padding, "bounding-box padding in meters");

  graspd::cli::SynthArgs synth;
  CLI::App* cmd_synth = app.add_subcommand("synth", "Synthesize grasps by optimization");
  cmd_synth->add_option("--hand", synth.hand_path, "hand description JSON")->required();
  cmd_synth->add_option("--sdf", synth.sdf_path, "object GSDF file")->required();
  cmd_synth->add_option("--config", synth.config_path, "optimizer config JSON");
  cmd_synth->add_option("--out", synth.out_dir, "output directory")->required();
  cmd_synth->add_option("--seeds", synth.seeds, "number of independent seeds (default 10)");
  cmd_synth->add_option("--jobs", synth.jobs, "worker threads (default 1)");

  graspd::cli::EvalArgs eval;
  CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate grasp files");
  cmd_eval->add_option("grasps", eval.grasp_files, "grasp JSON files")->required();
  cmd_eval->add_option("--hand", eval.hand_path, "hand description JSON")->required();
  cmd_eval->add_option("--sdf", eval.sdf_path, "object GSDF file")->required();
  cmd_eval->add_option("--out", eval.out_path, "JSON-lines output path");

  graspd::cli::ExportArgs exp;
  CLI::App* cmd_export = app.add_subcommand("export", "Export a grasp as an OBJ scene");
  cmd_export->add_option("grasp", exp.grasp_path, "grasp JSON file")->required();
  cmd_export->add_option("--hand", exp.hand_path, "hand description JSON")->required();
  cmd_export->add_option("--sdf", exp.sdf_path, "object GSDF file")->required();
  cmd_export->add_option("--out", exp.out_path, "output OBJ path")->required();

  CLI11_PARSE(app, argc, argv);

  if (cmd_bake->parsed()) return graspd::cli::cmd_bake(bake);
  if (cmd_synth->parsed()) return graspd::cli::cmd_synth(synth);
  if (cmd_eval->parsed()) return graspd::cli::cmd_eval(eval);
  if (cmd_export->parsed()) return graspd::cli::cmd_export(exp);
  return 0;
}
