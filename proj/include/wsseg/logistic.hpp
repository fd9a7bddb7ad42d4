#pragma once

// Built-in backend: per-class logistic regression over hand-crafted pixel features,
// trained by minibatch SGD on the summed sigmoid cross-entropy.

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "wsseg/classifier.hpp"
#include "wsseg/features.hpp"

namespace wsseg {

struct Prediction {
  LogitMapStack logits;
  ProbMapStack probs;
};

struct LabeledImage {
  const ImageTensor* image = nullptr;
  const MaskStack* mask = nullptr;
};

/// Features of one image, as produced by LogisticBackend::prepare.
class FeatureImage : public PreparedImage {
 public:
  FeatureImage(int width, int height, FeatureMatrix features)
      : width_(width), height_(height), features_(std::move(features)) {}
  int width() const override { return width_; }
  int height() const override { return height_; }
  const FeatureMatrix& features() const { return features_; }

 private:
  int width_, height_;
  FeatureMatrix features_;
};

/// Parameters theta: one weight row plus bias per class, over the configured features.
class SegmenterModel : public SegmentationModel {
 public:
  SegmenterModel(WeightMatrix weights, FeatureConfig features);

  const WeightMatrix& weights() const { return weights_; }
  WeightMatrix& weights() { return weights_; }
  const FeatureConfig& feature_config() const { return features_; }
  std::size_t label_count() const override { return weights_.classes; }

  Prediction predict(const ImageTensor& image) const;
  Prediction predict_features(const FeatureMatrix& features, int width, int height) const;
  ProbMapStack predict(const PreparedImage& image) const override;
  void save(const std::filesystem::path& path) const override;

  /// The file stores only weights; the feature configuration must be supplied. D is checked
  /// against it here as far as possible and exactly at predict time.
  static SegmenterModel load(const std::filesystem::path& path, const FeatureConfig& features);

  std::string serialize() const;
  static SegmenterModel deserialize(const std::string& bytes, const FeatureConfig& features,
                                    const std::string& where = "model");

 private:
  void check_dimension(std::size_t feature_count) const;

  WeightMatrix weights_;
  FeatureConfig features_;
};

/// -sum_i sum_l log P(y_il | I; theta) with the Bernoulli convention, plus
/// l2_penalty * ||w||^2 over the non-bias weights.
double nll_loss(const SegmenterModel& model, const ImageTensor& image, const MaskStack& mask,
                double l2_penalty = 0.0);

/// Analytic gradient of nll_loss with respect to the weight matrix.
WeightMatrix gradient(const SegmenterModel& model, const ImageTensor& image, const MaskStack& mask,
                      double l2_penalty = 0.0);

/// Pixel-major targets (i * L + l) from a class-major mask.
std::vector<std::uint8_t> pixel_major_targets(const MaskStack& mask);

/// Minibatch SGD from zero weights. Features are standardized internally and the result is
/// folded back into raw-feature weights. Training minimizes the mean per-pixel loss plus
/// l2_penalty times the squared norm of the standardized non-bias weights.
SegmenterModel train(std::span<const LabeledImage> data, const TrainConfig& cfg,
                     const FeatureConfig& features);

struct FeatureExample {
  const FeatureMatrix* features = nullptr;
  const MaskStack* mask = nullptr;
};
SegmenterModel train_on_features(std::span<const FeatureExample> data, std::size_t label_count,
                                 const TrainConfig& cfg, const FeatureConfig& features);

class LogisticBackend : public SegmenterBackend {
 public:
  LogisticBackend(FeatureConfig features, TrainConfig train)
      : features_(std::move(features)), train_(train) {}

  std::shared_ptr<const PreparedImage> prepare(const ImageTensor& image) const override;
  /// Uses the configured TrainConfig with rng_seed replaced by `seed`.
  std::unique_ptr<SegmentationModel> train(std::span<const TrainingExample> examples,
                                           std::size_t label_count,
                                           std::uint64_t seed) const override;

  const FeatureConfig& feature_config() const { return features_; }
  const TrainConfig& train_config() const { return train_; }

 private:
  FeatureConfig features_;
  TrainConfig train_;
};

}  // namespace wsseg
