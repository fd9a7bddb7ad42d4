#pragma once

// Weakly supervised EM over three folds A, B, C:
//   1. initialize pseudo-masks from keypoint disks
//   2. per iteration: train on (A,B), (B,C), (C,A); each model predicts the fold it did not
//      see and the predictions are binarized into that fold's new pseudo-masks
//   3. train the final model on every record with the last pseudo-masks

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wsseg/binarization.hpp"
#include "wsseg/classifier.hpp"
#include "wsseg/initialization.hpp"
#include "wsseg/types.hpp"

namespace wsseg {

inline constexpr int kFoldCount = 3;

struct EmConfig {
  int em_iterations = 2;
  InitConfig init;
  ThresholdPolicy policy;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct FoldSplit {
  std::vector<int> fold_of;  // fold index per record

  std::vector<std::size_t> members(int fold) const;
  /// Records of every fold except `held_out`, in record order.
  std::vector<std::size_t> complement(int held_out) const;
};

/// Uniform random partition into three folds whose sizes differ by at most one.
FoldSplit split_three_folds(std::size_t record_count, std::uint64_t seed);

struct TrainingEvent {
  int iteration = 0;      // 1-based EM iteration, 0 for the final full-set model
  int held_out_fold = -1;  // -1 for the final model
  std::vector<std::size_t> records;
};

struct PredictionEvent {
  int iteration = 0;
  int model_fold = 0;  // held-out fold of the predicting model
  std::size_t record = 0;
};

struct ThresholdEntry {
  int iteration = 0;
  std::size_t record = 0;
  std::size_t class_index = 0;
  std::optional<float> threshold;  // nullopt: class absent in the image
};

struct RunLog {
  std::vector<TrainingEvent> trainings;
  std::vector<PredictionEvent> predictions;
  std::vector<ThresholdEntry> thresholds;
};

/// Output of predicting one held-out image.
struct EStepImage {
  std::size_t record = 0;
  ProbMapStack probs;
  ClassThresholds thresholds;
  MaskStack mask;
};

/// Hooks for checkpointing; all default to no-ops.
class EmObserver {
 public:
  virtual ~EmObserver() = default;
  virtual void on_model(const TrainingEvent& /*event*/, const SegmentationModel& /*model*/) {}
  virtual void on_masks(int /*iteration*/, std::span<const MaskStack> /*masks*/) {}
};

struct EmResult {
  FoldSplit split;
  std::vector<MaskStack> initial_masks;
  std::vector<MaskStack> pseudo_masks;
  /// Held-out posteriors of the last E-step, one per record.
  std::vector<ProbMapStack> heldout_probs;
  std::unique_ptr<SegmentationModel> model;
  RunLog log;
};

/// Trains one model on the records listed in `train_records`.
std::unique_ptr<SegmentationModel> m_step(const SegmenterBackend& backend,
                                          std::span<const std::shared_ptr<const PreparedImage>> prepared,
                                          std::span<const MaskStack> masks,
                                          std::span<const std::size_t> train_records,
                                          std::size_t label_count, std::uint64_t seed);

/// Predicts the held-out records and binarizes them with their own keypoints. Under
/// ThresholdMode::class_average the returned masks use per-image thresholds; run_em
/// replaces them once every fold has been predicted.
std::vector<EStepImage> e_step(const SegmentationModel& model, std::span<const WeakRecord> records,
                               std::span<const std::shared_ptr<const PreparedImage>> prepared,
                               std::span<const std::size_t> held_out, const ThresholdPolicy& policy);

EmResult run_em(std::span<const WeakRecord> records, const LabelSpace& labels,
                const SegmenterBackend& backend, const EmConfig& cfg, EmObserver* observer = nullptr);

}  // namespace wsseg
