#pragma once

// Synthetic multi-label segmentation data with exact ground truth.
//
// Each image holds a few disks/rectangles on a textured background. A shape carries one
// class, or two with probability overlap_probability; shapes may also intersect. A pixel's
// color is a function of its label set (background tone plus one color offset per class)
// followed by additive Gaussian noise, so with zero noise the color determines the labels.
// Unlabeled "distractor" patches use weakened class offsets.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsseg/types.hpp"

namespace wsseg {

enum class ShapeKind { disk, rectangle };

struct SynthConfig {
  int image_size = 64;
  std::size_t class_count = 3;
  int shapes_min = 1;
  int shapes_max = 3;
  std::vector<ShapeKind> shape_kinds = {ShapeKind::disk, ShapeKind::rectangle};
  /// Mean shape half-size as a fraction of the image width.
  double shape_size = 0.12;
  /// Ratio between the largest and smallest per-image shape scale (1 disables).
  double size_variation = 3.0;
  double overlap_probability = 0.2;
  /// Offset between background tone and class colors.
  double color_contrast = 0.4;
  double noise = 0.1;
  double texture = 0.06;
  int distractors_max = 2;
  double distractor_strength = 0.5;
  int keypoints_per_class = 1;
  /// Keypoints on unlabeled pixels per image (0 for keypoint-only supervision).
  int background_keypoints = 0;
  std::uint64_t rng_seed = 0;

  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

struct KeypointShortfall {
  std::size_t record = 0;
  std::size_t class_index = 0;
  std::size_t requested = 0;
  std::size_t available = 0;
};

struct SampledKeypoints {
  KeypointAnnotation keypoints;
  std::vector<KeypointShortfall> shortfalls;  // record index left at 0
};

/// k pixels per non-empty class plane, uniformly without replacement. Classes with fewer
/// than k pixels contribute all of them and are reported.
SampledKeypoints sample_keypoints(const MaskStack& gt, int k, std::uint64_t seed,
                                  int background_points = 0);

struct SyntheticSet {
  Dataset dataset;
  std::vector<KeypointShortfall> shortfalls;
};

SyntheticSet generate(const SynthConfig& cfg, std::size_t n_images);

/// Per-class RGB color of a single-class region (before noise).
std::array<double, 3> class_color(const SynthConfig& cfg, std::size_t class_index);

/// Replaces every record's keypoints by k fresh samples from its ground truth.
std::vector<KeypointShortfall> resample_keypoints(Dataset& dataset, int k, std::uint64_t seed,
                                                  int background_points = 0);

/// Writes images, ground-truth mask stacks and manifest.json into `dir`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                   const std::string& manifest_name = "manifest.json");

struct BenchmarkSplit {
  Dataset train;
  Dataset test;
  SynthConfig config;
};

/// Pinned benchmark: 60 training and 30 test images, 3 classes, strong size variation.
SynthConfig benchmark_config();
BenchmarkSplit make_benchmark(const SynthConfig& cfg = benchmark_config(),
                              std::size_t train_images = 60, std::size_t test_images = 30);

}  // namespace wsseg
