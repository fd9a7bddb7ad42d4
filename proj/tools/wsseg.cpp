#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wsseg/commands.hpp"
#include "wsseg/kernels.hpp"

using namespace wsseg;

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised multi-label segmentation from keypoints"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path, out_dir, manifest, test_manifest, model_path;
  int threads = 0;
  std::optional<double> sigma;
  std::vector<double> grid;
  app.add_option("--threads", threads, "Worker cap (0 = runtime default); results do not depend on it")
      ->check(CLI::NonNegativeNumber);

  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("-c,--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    if (required) opt->required();
    sub->add_option("-o,--out", out_dir, "Output directory")->required();
  };

  auto* synth = app.add_subcommand("synth-gen", "Generate a synthetic train/test dataset");
  add_config(synth, false);

  auto* init = app.add_subcommand("init", "Write initial disk masks from keypoints");
  init->add_option("-m,--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  init->add_option("--sigma", sigma, "Disk radius as a fraction of image width");
  add_config(init, false);

  auto* train = app.add_subcommand("train", "Run EM training");
  train->add_option("-m,--manifest", manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  add_config(train, false);

  auto* sweep = app.add_subcommand("sigma-sweep", "Select sigma by approximate Jaccard from keypoints");
  sweep->add_option("-m,--manifest", manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid, "Sigma fractions (overrides the config grid)")->delimiter(',');
  add_config(sweep, false);

  auto* eval = app.add_subcommand("eval", "Jaccard of a trained model against ground truth");
  eval->add_option("-m,--manifest", manifest, "Manifest with gt_masks")->required()->check(CLI::ExistingFile);
  eval->add_option("--model", model_path, "Model file (.wsm)")->required()->check(CLI::ExistingFile);
  add_config(eval, false);

  auto* ablate = app.add_subcommand("ablate", "Threshold-policy and keypoint-count ablation");
  ablate->add_option("-m,--manifest", manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  ablate->add_option("-t,--test", test_manifest, "Test manifest with gt_masks")->required()->check(CLI::ExistingFile);
  add_config(ablate, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) set_thread_limit(threads);
    const RunConfig cfg = config_path.empty() ? parse_run_config("{}", "defaults") : load_run_config(config_path);
    if (*synth) cmd_synth_gen(cfg, out_dir);
    else if (*init) cmd_init(manifest, sigma, cfg, out_dir);
    else if (*train) cmd_train(manifest, cfg, out_dir);
    else if (*sweep) cmd_sigma_sweep(manifest, grid, cfg, out_dir);
    else if (*eval) cmd_eval(manifest, model_path, cfg, out_dir);
    else if (*ablate) cmd_ablate(manifest, test_manifest, cfg, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wsseg: %s\n", e.what());
    return 1;
  }
  return 0;
}
