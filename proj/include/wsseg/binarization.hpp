#pragma once

// E-step binarization of posteriors into pseudo-masks.
//
// Adaptive rule, per image and class l with keypoints K_l:
//   t_l = min(clamp_max, f({P(i_k, l) : k in K_l}))       f = mean or median
//   y_il = 1  iff  P(i, l) >= t_l
// A class without keypoints in an image is treated as absent there (empty plane).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsseg/types.hpp"

namespace wsseg {

enum class Aggregator { mean, median };
enum class ThresholdMode { adaptive, class_average, fixed };

std::string to_string(Aggregator a);
std::string to_string(ThresholdMode m);
Aggregator parse_aggregator(const std::string& s);
ThresholdMode parse_threshold_mode(const std::string& s);

struct ThresholdPolicy {
  Aggregator aggregator = Aggregator::mean;
  float clamp_max = 0.5f;
  ThresholdMode mode = ThresholdMode::adaptive;
  float fixed_threshold = 0.5f;  // used by ThresholdMode::fixed
  bool force_keypoints_positive = true;

  void validate() const;
  bool operator==(const ThresholdPolicy&) const = default;
};

/// Per-class threshold of one image; nullopt marks the class absent.
using ClassThresholds = std::vector<std::optional<float>>;

/// Mean, or median (even sizes average the two middle values), computed in double.
double aggregate(std::span<const float> values, Aggregator f);

std::optional<float> compute_threshold(const ProbMapStack& probs, const KeypointAnnotation& keypoints,
                                       std::size_t class_index, const ThresholdPolicy& policy);

/// compute_threshold for every class.
ClassThresholds compute_thresholds(const ProbMapStack& probs, const KeypointAnnotation& keypoints,
                                   const ThresholdPolicy& policy);

/// Applies per-class thresholds; absent classes stay empty. With force_keypoints_positive,
/// keypoint pixels of present classes are set regardless of their probability.
MaskStack binarize(const ProbMapStack& probs, const ClassThresholds& thresholds,
                   const KeypointAnnotation& keypoints, const ThresholdPolicy& policy);

/// Arithmetic mean of the per-image thresholds of images where the class is present.
std::optional<float> class_average_threshold(std::span<const std::optional<float>> per_image);

/// For each image, replaces every present-class threshold by the class average over all images.
std::vector<ClassThresholds> class_average_thresholds(std::span<const ClassThresholds> per_image);

/// Test-time rule: every class thresholded at `t` (default 0.5), no keypoints involved.
MaskStack binarize_fixed(const ProbMapStack& probs, float t = 0.5f);

}  // namespace wsseg
