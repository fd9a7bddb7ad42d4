#include "wsseg/approx_cv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wsseg/binarization.hpp"
#include "wsseg/error.hpp"

namespace wsseg {

std::string to_string(EstimateStatus s) {
  switch (s) {
    case EstimateStatus::ok: return "ok";
    case EstimateStatus::indeterminate: return "indeterminate";
    case EstimateStatus::no_positive_keypoints: return "no_positive_keypoints";
    case EstimateStatus::no_negative_keypoints: return "no_negative_keypoints";
  }
  return "?";
}

std::string to_string(ValidationRule r) {
  return r == ValidationRule::test_rule ? "test_rule" : "e_step_masks";
}

ValidationRule parse_validation_rule(const std::string& s) {
  if (s == "test_rule") return ValidationRule::test_rule;
  if (s == "e_step_masks") return ValidationRule::e_step_masks;
  throw ConfigError("unknown validation rule '" + s + "' (expected test_rule or e_step_masks)");
}

ConditionalEstimates estimates_from_rates(double tpr, double fpr, double pred_rate) {
  ConditionalEstimates est;
  est.tpr = tpr;
  est.fpr = fpr;
  est.pred_rate = pred_rate;
  if (tpr == fpr) {
    est.status = EstimateStatus::indeterminate;
    return est;
  }
  const double raw = (pred_rate - fpr) / (tpr - fpr);
  est.prior = std::clamp(raw, 0.0, 1.0);
  est.prior_clamped = est.prior != raw;
  return est;
}

ConditionalEstimates estimate_conditionals(std::span<const MaskStack> predicted,
                                           std::span<const KeypointAnnotation> keypoints,
                                           std::size_t class_index) {
  if (predicted.size() != keypoints.size())
    throw ConfigError("prediction and keypoint pools differ in size");
  std::size_t pos = 0, pos_hit = 0, neg = 0, neg_hit = 0, pixels = 0, predicted_pos = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const MaskStack& m = predicted[k];
    const KeypointAnnotation& kp = keypoints[k];
    const bool class_in_image = kp.has_class(class_index);
    for (const auto& p : kp.entries) {
      const bool hit = m.get(class_index, p.x, p.y);
      if (p.class_index == class_index) {
        ++pos;
        pos_hit += hit;
      } else if (!class_in_image) {
        ++neg;
        neg_hit += hit;
      }
    }
    for (const auto& b : kp.background) {
      ++neg;
      neg_hit += m.get(class_index, b.x, b.y);
    }
    pixels += m.pixel_count();
    predicted_pos += m.count(class_index);
  }

  ConditionalEstimates est;
  const double pred_rate = pixels ? static_cast<double>(predicted_pos) / static_cast<double>(pixels) : 0.0;
  if (pos == 0) {
    est.status = EstimateStatus::no_positive_keypoints;
  } else if (neg == 0) {
    est.status = EstimateStatus::no_negative_keypoints;
  } else {
    est = estimates_from_rates(static_cast<double>(pos_hit) / static_cast<double>(pos),
                               static_cast<double>(neg_hit) / static_cast<double>(neg), pred_rate);
  }
  est.pred_rate = pred_rate;
  est.positive_keypoints = pos;
  est.negative_keypoints = neg;
  return est;
}

ConditionalEstimates conditionals_from_ground_truth(std::span<const MaskStack> gt,
                                                    std::span<const MaskStack> pred,
                                                    std::size_t class_index) {
  if (gt.size() != pred.size()) throw ConfigError("ground truth and prediction pools differ in size");
  std::size_t p = 0, tp = 0, neg = 0, fp = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    auto g = gt[k].plane(class_index);
    auto y = pred[k].plane(class_index);
    if (g.size() != y.size()) throw ConfigError("dimension mismatch in image " + std::to_string(k));
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i]) {
        ++p;
        tp += y[i];
      } else {
        ++neg;
        fp += y[i];
      }
    }
  }
  ConditionalEstimates est;
  if (p == 0) {
    est.status = EstimateStatus::no_positive_keypoints;
    return est;
  }
  if (neg == 0) {
    est.status = EstimateStatus::no_negative_keypoints;
    return est;
  }
  const double n = static_cast<double>(p + neg);
  est = estimates_from_rates(static_cast<double>(tp) / static_cast<double>(p),
                             static_cast<double>(fp) / static_cast<double>(neg),
                             static_cast<double>(tp + fp) / n);
  est.positive_keypoints = p;
  est.negative_keypoints = neg;
  return est;
}

double approx_jaccard(double tpr, double fpr, double prior) {
  if (prior <= 0.0) return 0.0;
  const double denom = prior + fpr * (1.0 - prior);
  if (denom <= 0.0) return 0.0;
  return std::clamp(tpr * prior / denom, 0.0, 1.0);
}

double approx_jaccard(const ConditionalEstimates& est) {
  if (!est.usable()) throw ConfigError("J_approx requested for an unusable estimate (" + to_string(est.status) + ")");
  return approx_jaccard(est.tpr, est.fpr, est.prior);
}

ApproxJaccardEstimate approx_jaccard_pool(std::span<const MaskStack> predicted,
                                          std::span<const KeypointAnnotation> keypoints,
                                          std::size_t class_count) {
  ApproxJaccardEstimate out;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t l = 0; l < class_count; ++l) {
    out.conditionals.push_back(estimate_conditionals(predicted, keypoints, l));
    if (out.conditionals.back().usable()) {
      const double j = approx_jaccard(out.conditionals.back());
      out.per_class.emplace_back(j);
      sum += j;
      ++used;
    } else {
      out.per_class.emplace_back();
    }
  }
  if (used) out.mean = sum / static_cast<double>(used);
  return out;
}

CrossValidatedEstimate cross_validated_approx_jaccard(const EmResult& em,
                                                      std::span<const WeakRecord> records,
                                                      std::size_t class_count, ValidationRule rule) {
  CrossValidatedEstimate out;
  std::vector<double> class_sum(class_count, 0.0);
  std::vector<std::size_t> class_used(class_count, 0);
  double fold_sum = 0.0;
  std::size_t folds_used = 0;

  for (int f = 0; f < kFoldCount; ++f) {
    std::vector<MaskStack> masks;
    std::vector<KeypointAnnotation> kps;
    for (std::size_t r : em.split.members(f)) {
      masks.push_back(rule == ValidationRule::test_rule ? binarize_fixed(em.heldout_probs[r])
                                                        : em.pseudo_masks[r]);
      kps.push_back(records[r].keypoints);
    }
    out.folds.push_back(approx_jaccard_pool(masks, kps, class_count));
    const auto& fe = out.folds.back();
    for (std::size_t l = 0; l < class_count; ++l) {
      if (fe.per_class[l]) {
        class_sum[l] += *fe.per_class[l];
        ++class_used[l];
      } else {
        out.excluded.push_back({f, l, fe.conditionals[l].status});
      }
    }
    if (fe.mean) {
      fold_sum += *fe.mean;
      ++folds_used;
    }
  }
  for (std::size_t l = 0; l < class_count; ++l)
    out.per_class.push_back(class_used[l] ? std::optional<double>(class_sum[l] / static_cast<double>(class_used[l]))
                                          : std::nullopt);
  if (folds_used) out.mean = fold_sum / static_cast<double>(folds_used);
  return out;
}

std::size_t select_best(std::span<const SweepRow> rows) {
  if (rows.empty()) throw ConfigError("sigma grid must not be empty");
  std::size_t best = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double m = rows[k].estimate.mean, b = rows[best].estimate.mean;
    if (m > b || (m == b && rows[k].sigma_fraction < rows[best].sigma_fraction)) best = k;
  }
  return best;
}

SweepReport sigma_sweep(std::span<const WeakRecord> records, const LabelSpace& labels,
                        const SegmenterBackend& backend, const EmConfig& base,
                        std::span<const double> sigma_grid, ValidationRule rule) {
  if (sigma_grid.empty()) throw ConfigError("sigma grid must not be empty");
  SweepReport report;
  for (double sigma : sigma_grid) {
    EmConfig cfg = base;
    cfg.init.sigma_fraction = sigma;
    const EmResult em = run_em(records, labels, backend, cfg);
    report.rows.push_back({sigma, cross_validated_approx_jaccard(em, records, labels.count(), rule)});
  }
  report.best = select_best(report.rows);
  return report;
}

std::string format_sweep_table(const SweepReport& report, const LabelSpace& labels) {
  std::string out = "sigma_fraction";
  for (const auto& n : labels.names()) out += "," + n;
  out += ",mean,excluded\n";
  char buf[64];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%.4f", row.sigma_fraction);
    out += buf;
    for (const auto& v : row.estimate.per_class) {
      if (v) {
        std::snprintf(buf, sizeof buf, ",%.4f", *v);
        out += buf;
      } else {
        out += ",NA";
      }
    }
    if (std::isfinite(row.estimate.mean)) {
      std::snprintf(buf, sizeof buf, ",%.4f,", row.estimate.mean);
      out += buf;
    } else {
      out += ",-inf,";
    }
    for (std::size_t k = 0; k < row.estimate.excluded.size(); ++k) {
      const auto& e = row.estimate.excluded[k];
      if (k) out += ";";
      out += "fold" + std::to_string(e.fold) + ":" + labels.name(e.class_index) + ":" + to_string(e.status);
    }
    out += "\n";
  }
  if (!report.rows.empty()) {
    std::snprintf(buf, sizeof buf, "# best sigma_fraction=%.4f\n", report.best_sigma());
    out += buf;
  }
  return out;
}

}  // namespace wsseg
