#pragma once

// Run configuration file (JSON). Every section is optional; unknown keys are rejected
// with the JSON pointer of the offending key.
//
//   { "seed": 0,
//     "init":     { "sigma_fraction": 0.06 },
//     "policy":   { "mode": "adaptive", "aggregator": "mean", "clamp_max": 0.5,
//                   "fixed_threshold": 0.5, "force_keypoints_positive": true },
//     "train":    { "learning_rate": 0.1, "epochs": 20, "minibatch_pixels": 4096, "l2_penalty": 1e-4 },
//     "em":       { "iterations": 2 },
//     "features": { "window_radii": [2, 5], "smoothing_scales": [1], "include_coords": false },
//     "synth":    { "preset": "benchmark" | "default", <SynthConfig fields>,
//                   "train_images": 60, "test_images": 30 },
//     "sweep":    { "sigma_grid": [0.03, 0.06, 0.12], "validation_rule": "test_rule" },
//     "eval":     { "threshold": 0.5, "include_background_in_mean": true },
//     "ablation": { "modes": ["adaptive", "class_average"], "clamps": [0.5, 1.0],
//                   "aggregators": ["mean", "median"], "keypoint_counts": [1],
//                   "select_sigma": false } }
//
// The top-level seed feeds every random stream: EM folds and SGD ("em"), keypoint
// resampling ("keypoints") and, unless the benchmark preset pins its own, the generator.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsseg/approx_cv.hpp"
#include "wsseg/binarization.hpp"
#include "wsseg/em_trainer.hpp"
#include "wsseg/evaluation.hpp"
#include "wsseg/features.hpp"
#include "wsseg/initialization.hpp"
#include "wsseg/logistic.hpp"
#include "wsseg/synth.hpp"

namespace wsseg {

struct AblationConfig {
  std::vector<ThresholdMode> modes = {ThresholdMode::adaptive, ThresholdMode::class_average};
  std::vector<float> clamps = {0.5f, 1.0f};
  std::vector<Aggregator> aggregators = {Aggregator::mean, Aggregator::median};
  /// Empty keeps the manifest's keypoints; otherwise keypoints are resampled from ground truth.
  std::vector<int> keypoint_counts;
  /// Pick sigma by approximate cross validation on the training keypoints before the matrix.
  bool select_sigma = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  InitConfig init;
  ThresholdPolicy policy;
  TrainConfig train;
  int em_iterations = 2;
  FeatureConfig features;
  SynthConfig synth;
  std::size_t synth_train_images = 60;
  std::size_t synth_test_images = 30;
  std::vector<double> sigma_grid = default_sigma_grid();
  ValidationRule validation_rule = ValidationRule::test_rule;
  EvalOptions eval;
  AblationConfig ablation;

  void validate() const;
  /// EmConfig with the derived EM seed.
  EmConfig em_config() const;
  /// TrainConfig with the derived SGD seed.
  TrainConfig train_config() const;
  /// Seed of a named sub-stream of `seed`.
  std::uint64_t stream(const char* name) const;
};

RunConfig parse_run_config(const std::string& text, const std::string& where = "config");
RunConfig load_run_config(const std::filesystem::path& path);
/// Full snapshot, including defaults, as pretty-printed JSON.
std::string to_json_string(const RunConfig& cfg);

}  // namespace wsseg
