#include "wsseg/evaluation.hpp"

#include <cstdio>

#include "wsseg/binarization.hpp"
#include "wsseg/error.hpp"

namespace wsseg {

void JaccardCounts::add(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> pred) {
  if (gt.size() != pred.size()) throw ConfigError("ground truth and prediction differ in size");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i]) {
      ++positives;
      if (pred[i]) ++true_positive;
    } else if (pred[i]) {
      ++false_positive;
    }
  }
}

double JaccardCounts::value() const {
  if (positives == 0) return false_positive == 0 ? 1.0 : 0.0;
  return static_cast<double>(true_positive) / static_cast<double>(positives + false_positive);
}

namespace {

void check_pools(std::span<const MaskStack> gt, std::span<const MaskStack> pred) {
  if (gt.size() != pred.size()) throw ConfigError("ground truth and prediction pools differ in size");
  for (std::size_t k = 0; k < gt.size(); ++k)
    if (gt[k].width() != pred[k].width() || gt[k].height() != pred[k].height() ||
        gt[k].classes() != pred[k].classes())
      throw ConfigError("dimension mismatch between ground truth and prediction of image " +
                        std::to_string(k));
}

}  // namespace

double jaccard(std::span<const MaskStack> gt, std::span<const MaskStack> pred,
               std::size_t class_index) {
  check_pools(gt, pred);
  JaccardCounts c;
  for (std::size_t k = 0; k < gt.size(); ++k) c.add(gt[k].plane(class_index), pred[k].plane(class_index));
  return c.value();
}

MaskStack background_mask(const MaskStack& mask) {
  MaskStack out(mask.width(), mask.height(), 1);
  auto bg = out.plane(0);
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    bool any = false;
    for (std::size_t l = 0; l < mask.classes() && !any; ++l) any = mask.get(l, i);
    bg[i] = any ? 0 : 1;
  }
  return out;
}

double JaccardReport::value(const std::string& column) const {
  for (std::size_t k = 0; k < columns.size(); ++k)
    if (columns[k] == column) return values[k];
  throw ConfigError("report has no column '" + column + "'");
}

JaccardReport evaluate_masks(const LabelSpace& labels, std::span<const MaskStack> gt,
                             std::span<const MaskStack> pred, const EvalOptions& options) {
  check_pools(gt, pred);
  JaccardReport report;
  report.mean_includes_background = options.include_background_in_mean;

  JaccardCounts bck;
  for (std::size_t k = 0; k < gt.size(); ++k)
    bck.add(background_mask(gt[k]).plane(0), background_mask(pred[k]).plane(0));
  report.columns.push_back("Bck");
  report.values.push_back(bck.value());

  for (std::size_t l = 0; l < labels.count(); ++l) {
    report.columns.push_back(labels.name(l));
    report.values.push_back(jaccard(gt, pred, l));
  }

  const std::size_t first = options.include_background_in_mean ? 0 : 1;
  double sum = 0.0;
  for (std::size_t k = first; k < report.values.size(); ++k) sum += report.values[k];
  report.mean = sum / static_cast<double>(report.values.size() - first);
  return report;
}

JaccardReport evaluate(const Dataset& test, const SegmentationModel& model,
                       const SegmenterBackend& backend, const EvalOptions& options) {
  if (!test.has_full_ground_truth()) throw ConfigError("evaluation needs ground truth for every record");
  std::vector<MaskStack> gt, pred;
  gt.reserve(test.records.size());
  pred.reserve(test.records.size());
  for (std::size_t k = 0; k < test.records.size(); ++k) {
    const auto prepared = backend.prepare(test.records[k].image);
    pred.push_back(binarize_fixed(model.predict(*prepared), options.threshold));
    gt.push_back(*test.ground_truth[k]);
  }
  return evaluate_masks(test.labels, gt, pred, options);
}

std::string format_jaccard_table(const std::vector<std::pair<std::string, JaccardReport>>& rows) {
  std::string out;
  if (rows.empty()) return out;
  out += "method";
  for (const auto& c : rows.front().second.columns) out += "," + c;
  out += ",Mean\n";
  char buf[32];
  for (const auto& [label, report] : rows) {
    out += label;
    for (double v : report.values) {
      std::snprintf(buf, sizeof buf, ",%.4f", v);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.4f\n", report.mean);
    out += buf;
  }
  return out;
}

}  // namespace wsseg
