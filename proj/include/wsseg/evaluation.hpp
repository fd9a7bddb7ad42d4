#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wsseg/classifier.hpp"
#include "wsseg/types.hpp"

namespace wsseg {

/// Pooled counts for one class: J = TP / (|y=1| + FP).
struct JaccardCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t positives = 0;  // |y=1|

  void add(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> pred);
  /// Both empty gives 1; no positives but false positives gives 0.
  double value() const;
};

/// Jaccard index of class l pooled over all images.
double jaccard(std::span<const MaskStack> gt, std::span<const MaskStack> pred, std::size_t class_index);

/// Single-plane stack that is 1 where no class is set.
MaskStack background_mask(const MaskStack& mask);

struct JaccardReport {
  std::vector<std::string> columns;  // "Bck" then the class names
  std::vector<double> values;
  double mean = 0.0;
  bool mean_includes_background = true;

  double value(const std::string& column) const;
};

struct EvalOptions {
  float threshold = 0.5f;
  bool include_background_in_mean = true;
};

/// Per-class and background Jaccard of predicted masks against ground truth.
JaccardReport evaluate_masks(const LabelSpace& labels, std::span<const MaskStack> gt,
                             std::span<const MaskStack> pred, const EvalOptions& options = {});

/// Predicts every record and binarizes with the fixed test-time threshold.
/// Throws ConfigError when a record lacks ground truth.
JaccardReport evaluate(const Dataset& test, const SegmentationModel& model,
                       const SegmenterBackend& backend, const EvalOptions& options = {});

/// CSV with a leading label column: "method,Bck,<classes...>,Mean".
std::string format_jaccard_table(const std::vector<std::pair<std::string, JaccardReport>>& rows);

}  // namespace wsseg
