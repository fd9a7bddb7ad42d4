#pragma once

// Jaccard estimation from keypoints alone.
//
// With tpr = P(yhat=1 | y=1), fpr = P(yhat=1 | y=0) and pred_rate = P(yhat=1):
//   prior     = (pred_rate - fpr) / (tpr - fpr)                          ~ P(y=1)
//   J_approx  = tpr * prior / (prior + fpr * (1 - prior))
// tpr is measured on keypoints of the class, fpr on keypoints known not to carry it.
// When the three rates are exact, J_approx is exactly the Jaccard index.

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsseg/classifier.hpp"
#include "wsseg/em_trainer.hpp"
#include "wsseg/types.hpp"

namespace wsseg {

enum class EstimateStatus {
  ok,
  indeterminate,          // tpr == fpr, the prior is not identifiable
  no_positive_keypoints,  // tpr undefined
  no_negative_keypoints,  // fpr undefined
};

std::string to_string(EstimateStatus s);

struct ConditionalEstimates {
  double tpr = 0.0;
  double fpr = 0.0;
  double pred_rate = 0.0;
  double prior = 0.0;
  bool prior_clamped = false;  // the raw ratio fell outside [0,1]
  EstimateStatus status = EstimateStatus::ok;
  std::size_t positive_keypoints = 0;
  std::size_t negative_keypoints = 0;

  bool usable() const { return status == EstimateStatus::ok; }
};

/// Fills prior (clamped to [0,1]) and status from tpr, fpr and pred_rate.
ConditionalEstimates estimates_from_rates(double tpr, double fpr, double pred_rate);

/// Keypoint-based rates for class l over a pool of predicted masks.
///
/// Positives: keypoints of class l. Negatives: keypoints of other classes lying in images
/// with no class-l keypoint, plus every background keypoint. pred_rate pools all pixels.
ConditionalEstimates estimate_conditionals(std::span<const MaskStack> predicted,
                                           std::span<const KeypointAnnotation> keypoints,
                                           std::size_t class_index);

/// Exact rates from full ground truth; used to check the estimator algebra.
ConditionalEstimates conditionals_from_ground_truth(std::span<const MaskStack> gt,
                                                    std::span<const MaskStack> pred,
                                                    std::size_t class_index);

/// Zero when the prior is zero or the denominator vanishes; otherwise clamped to [0,1].
double approx_jaccard(double tpr, double fpr, double prior);
double approx_jaccard(const ConditionalEstimates& est);

struct ApproxJaccardEstimate {
  std::vector<std::optional<double>> per_class;  // nullopt when excluded
  std::optional<double> mean;                    // nullopt when every class is excluded
  std::vector<ConditionalEstimates> conditionals;
};

/// Per-class J_approx over one pooled set of images and their mean over usable classes.
ApproxJaccardEstimate approx_jaccard_pool(std::span<const MaskStack> predicted,
                                          std::span<const KeypointAnnotation> keypoints,
                                          std::size_t class_count);

/// Which binary predictions of the held-out folds feed the estimator.
enum class ValidationRule {
  test_rule,     // held-out posteriors thresholded at 0.5 for every class, as at test time
  e_step_masks,  // the pseudo-masks produced by the last E-step
};

std::string to_string(ValidationRule r);
ValidationRule parse_validation_rule(const std::string& s);

struct Exclusion {
  int fold = 0;
  std::size_t class_index = 0;
  EstimateStatus status = EstimateStatus::ok;
};

struct CrossValidatedEstimate {
  std::vector<std::optional<double>> per_class;  // mean over folds where usable
  double mean = -std::numeric_limits<double>::infinity();
  std::vector<ApproxJaccardEstimate> folds;
  std::vector<Exclusion> excluded;
};

/// Estimate per fold (classes averaged within the fold), then averaged over folds.
CrossValidatedEstimate cross_validated_approx_jaccard(const EmResult& em,
                                                      std::span<const WeakRecord> records,
                                                      std::size_t class_count,
                                                      ValidationRule rule = ValidationRule::test_rule);

struct SweepRow {
  double sigma_fraction = 0.0;
  CrossValidatedEstimate estimate;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::size_t best = 0;
  double best_sigma() const { return rows.at(best).sigma_fraction; }
};

/// Runs the whole EM pipeline once per sigma and keeps the sigma with the highest mean
/// J_approx; ties go to the smaller sigma. The trained models are discarded.
SweepReport sigma_sweep(std::span<const WeakRecord> records, const LabelSpace& labels,
                        const SegmenterBackend& backend, const EmConfig& base,
                        std::span<const double> sigma_grid,
                        ValidationRule rule = ValidationRule::test_rule);

/// Picks the winning row of already-evaluated rows.
std::size_t select_best(std::span<const SweepRow> rows);

/// CSV "sigma_fraction,<classes...>,mean,excluded" plus a trailing "# best ..." line.
std::string format_sweep_table(const SweepReport& report, const LabelSpace& labels);

}  // namespace wsseg
