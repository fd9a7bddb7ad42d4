#include "wsseg/binarization.hpp"

#include <algorithm>

#include "wsseg/error.hpp"

namespace wsseg {

std::string to_string(Aggregator a) { return a == Aggregator::mean ? "mean" : "median"; }

std::string to_string(ThresholdMode m) {
  switch (m) {
    case ThresholdMode::adaptive: return "adaptive";
    case ThresholdMode::class_average: return "class_average";
    case ThresholdMode::fixed: return "fixed";
  }
  return "?";
}

Aggregator parse_aggregator(const std::string& s) {
  if (s == "mean") return Aggregator::mean;
  if (s == "median") return Aggregator::median;
  throw ConfigError("unknown aggregator '" + s + "' (expected mean or median)");
}

ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == "adaptive") return ThresholdMode::adaptive;
  if (s == "class_average") return ThresholdMode::class_average;
  if (s == "fixed") return ThresholdMode::fixed;
  throw ConfigError("unknown threshold mode '" + s + "' (expected adaptive, class_average or fixed)");
}

void ThresholdPolicy::validate() const {
  if (!(clamp_max > 0.0f && clamp_max <= 1.0f)) throw ConfigError("policy.clamp_max must lie in (0, 1]");
  if (mode == ThresholdMode::fixed && !(fixed_threshold > 0.0f && fixed_threshold < 1.0f))
    throw ConfigError("policy.fixed_threshold must lie in (0, 1)");
}

double aggregate(std::span<const float> values, Aggregator f) {
  if (values.empty()) throw ConfigError("cannot aggregate an empty sample");
  if (f == Aggregator::mean) {
    double s = 0.0;
    for (float v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  std::vector<float> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return (static_cast<double>(sorted[n / 2 - 1]) + sorted[n / 2]) / 2.0;
}

std::optional<float> compute_threshold(const ProbMapStack& probs, const KeypointAnnotation& keypoints,
                                       std::size_t class_index, const ThresholdPolicy& policy) {
  std::vector<float> samples;
  for (const auto& kp : keypoints.entries)
    if (kp.class_index == class_index) samples.push_back(probs.get(class_index, kp.x, kp.y));
  if (samples.empty()) return std::nullopt;
  const auto t = static_cast<float>(aggregate(samples, policy.aggregator));
  return std::min(policy.clamp_max, t);
}

ClassThresholds compute_thresholds(const ProbMapStack& probs, const KeypointAnnotation& keypoints,
                                   const ThresholdPolicy& policy) {
  ClassThresholds out(probs.classes());
  for (std::size_t l = 0; l < probs.classes(); ++l) out[l] = compute_threshold(probs, keypoints, l, policy);
  return out;
}

MaskStack binarize(const ProbMapStack& probs, const ClassThresholds& thresholds,
                   const KeypointAnnotation& keypoints, const ThresholdPolicy& policy) {
  if (thresholds.size() != probs.classes())
    throw ConfigError("threshold count does not match the probability map");
  MaskStack mask(probs.width(), probs.height(), probs.classes());
  for (std::size_t l = 0; l < probs.classes(); ++l) {
    if (!thresholds[l]) continue;
    const float t = *thresholds[l];
    auto p = probs.plane(l);
    auto m = mask.plane(l);
    for (std::size_t i = 0; i < p.size(); ++i) m[i] = p[i] >= t ? 1 : 0;
  }
  if (policy.force_keypoints_positive)
    for (const auto& kp : keypoints.entries)
      if (kp.class_index < thresholds.size() && thresholds[kp.class_index])
        mask.set(kp.class_index, mask.pixel(kp.x, kp.y), true);
  return mask;
}

std::optional<float> class_average_threshold(std::span<const std::optional<float>> per_image) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : per_image)
    if (t) {
      sum += *t;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return static_cast<float>(sum / static_cast<double>(n));
}

std::vector<ClassThresholds> class_average_thresholds(std::span<const ClassThresholds> per_image) {
  std::vector<ClassThresholds> out(per_image.begin(), per_image.end());
  if (per_image.empty()) return out;
  const std::size_t classes = per_image.front().size();
  for (std::size_t l = 0; l < classes; ++l) {
    std::vector<std::optional<float>> column;
    for (const auto& img : per_image) column.push_back(img.at(l));
    const auto avg = class_average_threshold(column);
    for (auto& img : out)
      if (img[l]) img[l] = avg;
  }
  return out;
}

MaskStack binarize_fixed(const ProbMapStack& probs, float t) {
  MaskStack mask(probs.width(), probs.height(), probs.classes());
  for (std::size_t l = 0; l < probs.classes(); ++l) {
    auto p = probs.plane(l);
    auto m = mask.plane(l);
    for (std::size_t i = 0; i < p.size(); ++i) m[i] = p[i] >= t ? 1 : 0;
  }
  return mask;
}

}  // namespace wsseg
