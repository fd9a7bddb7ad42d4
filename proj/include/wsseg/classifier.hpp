#pragma once

// Pluggable multi-label pixel classifier.
//
// The EM trainer only talks to SegmenterBackend / SegmentationModel. A backend turns each
// image into an opaque PreparedImage once (features, tensors, ...) and then trains models
// on (prepared image, mask) pairs and predicts independent per-class sigmoid posteriors.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>

#include "wsseg/types.hpp"

namespace wsseg {

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 20;
  std::size_t minibatch_pixels = 4096;
  double l2_penalty = 1e-4;
  std::uint64_t rng_seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

class PreparedImage {
 public:
  virtual ~PreparedImage() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
};

class SegmentationModel {
 public:
  virtual ~SegmentationModel() = default;
  virtual std::size_t label_count() const = 0;
  virtual ProbMapStack predict(const PreparedImage& image) const = 0;
  virtual void save(const std::filesystem::path& path) const = 0;
};

struct TrainingExample {
  std::size_t record = 0;  // index of the record in the caller's dataset
  const PreparedImage* image = nullptr;
  const MaskStack* mask = nullptr;
};

class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;
  virtual std::shared_ptr<const PreparedImage> prepare(const ImageTensor& image) const = 0;
  /// `seed` selects the training randomness; equal inputs and seed give identical models.
  virtual std::unique_ptr<SegmentationModel> train(std::span<const TrainingExample> examples,
                                                   std::size_t label_count,
                                                   std::uint64_t seed) const = 0;
};

}  // namespace wsseg
