#pragma once

// Command implementations behind the wsseg executable. Each command writes its outputs
// plus run.json (command, version, seed, inputs, full config snapshot) into out_dir.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wsseg/config.hpp"

namespace wsseg {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

/// Writes train/ and test/ (images, gt masks, manifest.json) generated from cfg.synth.
void cmd_synth_gen(const RunConfig& cfg, const fs::path& out_dir);

/// Disk initialization only. `sigma_fraction` overrides cfg.init when given.
void cmd_init(const fs::path& manifest, std::optional<double> sigma_fraction, const RunConfig& cfg,
              const fs::path& out_dir);

/// Full EM pipeline: model.wsm, pseudo_masks/, heldout_probs/, run_log.json, checkpoints/.
void cmd_train(const fs::path& manifest, const RunConfig& cfg, const fs::path& out_dir);

/// sweep.csv over `grid` (cfg.sigma_grid when empty).
void cmd_sigma_sweep(const fs::path& manifest, const std::vector<double>& grid, const RunConfig& cfg,
                     const fs::path& out_dir);

/// jaccard.csv of `model` on a manifest with ground truth. The model file holds weights
/// only, so cfg.features must match the training run.
void cmd_eval(const fs::path& manifest, const fs::path& model, const RunConfig& cfg,
              const fs::path& out_dir);

/// ablation.csv: one row per (mode, clamp, aggregator, keypoint count), trained on `train`
/// and scored on `test`.
void cmd_ablate(const fs::path& train_manifest, const fs::path& test_manifest, const RunConfig& cfg,
                const fs::path& out_dir);

struct AblationRow {
  ThresholdMode mode = ThresholdMode::adaptive;
  float clamp_max = 0.5f;
  Aggregator aggregator = Aggregator::mean;
  std::optional<int> keypoints;  // nullopt: the dataset's own keypoints
  double sigma_fraction = 0.0;
  JaccardReport report;
};

/// The ablation matrix itself, in the order keypoints > mode > clamp > aggregator. With
/// ablation.select_sigma the disk radius comes from a sweep over cfg.sigma_grid on `train`.
std::vector<AblationRow> run_ablation(const Dataset& train, const Dataset& test, const RunConfig& cfg);
std::string format_ablation_table(const std::vector<AblationRow>& rows, const LabelSpace& labels);

/// Keypoint resampling seed used for a keypoint count k.
std::uint64_t keypoint_seed(const RunConfig& cfg, int k);

}  // namespace wsseg
