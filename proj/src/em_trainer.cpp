#include "wsseg/em_trainer.hpp"

#include <numeric>

#include "wsseg/error.hpp"
#include "wsseg/rng.hpp"

namespace wsseg {

void EmConfig::validate() const {
  if (em_iterations < 1) throw ConfigError("em.iterations must be >= 1");
  init.validate();
  policy.validate();
}

std::vector<std::size_t> FoldSplit::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of.size(); ++r)
    if (fold_of[r] == fold) out.push_back(r);
  return out;
}

std::vector<std::size_t> FoldSplit::complement(int held_out) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of.size(); ++r)
    if (fold_of[r] != held_out) out.push_back(r);
  return out;
}

FoldSplit split_three_folds(std::size_t record_count, std::uint64_t seed) {
  if (record_count < kFoldCount)
    throw ConfigError("three-fold EM needs at least 3 records, got " + std::to_string(record_count));
  std::vector<std::size_t> order(record_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "folds"));
  rng.shuffle(std::span<std::size_t>(order));
  FoldSplit split;
  split.fold_of.assign(record_count, 0);
  for (std::size_t k = 0; k < record_count; ++k) split.fold_of[order[k]] = static_cast<int>(k % kFoldCount);
  return split;
}

std::unique_ptr<SegmentationModel> m_step(const SegmenterBackend& backend,
                                          std::span<const std::shared_ptr<const PreparedImage>> prepared,
                                          std::span<const MaskStack> masks,
                                          std::span<const std::size_t> train_records,
                                          std::size_t label_count, std::uint64_t seed) {
  if (train_records.empty()) throw ConfigError("m-step needs at least one training record");
  std::vector<TrainingExample> examples;
  examples.reserve(train_records.size());
  for (std::size_t r : train_records) examples.push_back({r, prepared[r].get(), &masks[r]});
  return backend.train(examples, label_count, seed);
}

namespace {

ClassThresholds image_thresholds(const ProbMapStack& probs, const KeypointAnnotation& keypoints,
                                 const ThresholdPolicy& policy) {
  if (policy.mode != ThresholdMode::fixed) return compute_thresholds(probs, keypoints, policy);
  ClassThresholds t(probs.classes());
  for (std::size_t l = 0; l < t.size(); ++l)
    if (keypoints.has_class(l)) t[l] = policy.fixed_threshold;
  return t;
}

}  // namespace

std::vector<EStepImage> e_step(const SegmentationModel& model, std::span<const WeakRecord> records,
                               std::span<const std::shared_ptr<const PreparedImage>> prepared,
                               std::span<const std::size_t> held_out, const ThresholdPolicy& policy) {
  std::vector<EStepImage> out;
  out.reserve(held_out.size());
  for (std::size_t r : held_out) {
    EStepImage img;
    img.record = r;
    img.probs = model.predict(*prepared[r]);
    img.thresholds = image_thresholds(img.probs, records[r].keypoints, policy);
    img.mask = binarize(img.probs, img.thresholds, records[r].keypoints, policy);
    out.push_back(std::move(img));
  }
  return out;
}

EmResult run_em(std::span<const WeakRecord> records, const LabelSpace& labels,
                const SegmenterBackend& backend, const EmConfig& cfg, EmObserver* observer) {
  cfg.validate();
  const std::size_t n = records.size();
  const std::size_t classes = labels.count();

  EmResult result;
  result.split = split_three_folds(n, cfg.rng_seed);

  std::vector<std::shared_ptr<const PreparedImage>> prepared(n);
  result.initial_masks.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    prepared[r] = backend.prepare(records[r].image);
    result.initial_masks.push_back(
        init_masks_from_keypoints(records[r].image, records[r].keypoints, labels, cfg.init));
  }
  result.pseudo_masks = result.initial_masks;
  result.heldout_probs.resize(n);
  if (observer) observer->on_masks(0, result.pseudo_masks);

  for (int iter = 1; iter <= cfg.em_iterations; ++iter) {
    // M-steps: all three models see the masks of the previous round.
    std::vector<std::unique_ptr<SegmentationModel>> models(kFoldCount);
    for (int f = 0; f < kFoldCount; ++f) {
      TrainingEvent ev{iter, f, result.split.complement(f)};
      const std::uint64_t seed =
          derive_seed(cfg.rng_seed, "m-step", static_cast<std::uint64_t>(iter * kFoldCount + f));
      models[f] = m_step(backend, prepared, result.pseudo_masks, ev.records, classes, seed);
      if (observer) observer->on_model(ev, *models[f]);
      result.log.trainings.push_back(std::move(ev));
    }

    // E-steps.
    std::vector<EStepImage> predicted(n);
    for (int f = 0; f < kFoldCount; ++f) {
      const auto held_out = result.split.members(f);
      for (auto& img : e_step(*models[f], records, prepared, held_out, cfg.policy)) {
        result.log.predictions.push_back({iter, f, img.record});
        const std::size_t r = img.record;
        predicted[r] = std::move(img);
      }
    }

    if (cfg.policy.mode == ThresholdMode::class_average) {
      std::vector<ClassThresholds> per_image;
      per_image.reserve(n);
      for (const auto& img : predicted) per_image.push_back(img.thresholds);
      const auto averaged = class_average_thresholds(per_image);
      for (std::size_t r = 0; r < n; ++r) {
        predicted[r].thresholds = averaged[r];
        predicted[r].mask = binarize(predicted[r].probs, averaged[r], records[r].keypoints, cfg.policy);
      }
    }

    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t l = 0; l < classes; ++l)
        result.log.thresholds.push_back({iter, r, l, predicted[r].thresholds[l]});
      result.pseudo_masks[r] = std::move(predicted[r].mask);
      result.heldout_probs[r] = std::move(predicted[r].probs);
    }
    if (observer) observer->on_masks(iter, result.pseudo_masks);
  }

  TrainingEvent final_event{0, -1, {}};
  final_event.records.resize(n);
  std::iota(final_event.records.begin(), final_event.records.end(), std::size_t{0});
  result.model = m_step(backend, prepared, result.pseudo_masks, final_event.records, classes,
                        derive_seed(cfg.rng_seed, "final"));
  if (observer) observer->on_model(final_event, *result.model);
  result.log.trainings.push_back(std::move(final_event));
  return result;
}

}  // namespace wsseg
