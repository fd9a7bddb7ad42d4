#include "wsseg/logistic.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "wsseg/error.hpp"
#include "wsseg/io.hpp"
#include "wsseg/rng.hpp"

namespace wsseg {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (minibatch_pixels < 1) throw ConfigError("train.minibatch_pixels must be >= 1");
  if (!(l2_penalty >= 0.0)) throw ConfigError("train.l2_penalty must be >= 0");
}

SegmenterModel::SegmenterModel(WeightMatrix weights, FeatureConfig features)
    : weights_(std::move(weights)), features_(std::move(features)) {
  for (double w : weights_.data)
    if (!std::isfinite(w)) throw TrainingError("model weights must be finite");
}

void SegmenterModel::check_dimension(std::size_t feature_count) const {
  if (feature_count != weights_.features)
    throw ConfigError("model expects " + std::to_string(weights_.features) +
                      " features but the feature configuration yields " +
                      std::to_string(feature_count));
}

Prediction SegmenterModel::predict_features(const FeatureMatrix& features, int width,
                                            int height) const {
  check_dimension(features.cols);
  const std::size_t n = features.rows, classes = weights_.classes;
  std::vector<double> g(n * classes);
  parallel::logits(features, weights_, g);

  Prediction out;
  out.logits.width = width;
  out.logits.height = height;
  out.logits.classes = classes;
  out.logits.values.resize(n * classes);
  out.probs = ProbMapStack(width, height, classes);
  for (std::size_t l = 0; l < classes; ++l) {
    auto plane = out.probs.plane(l);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = g[i * classes + l];
      out.logits.values[l * n + i] = v;
      plane[i] = static_cast<float>(sigmoid(v));
    }
  }
  return out;
}

Prediction SegmenterModel::predict(const ImageTensor& image) const {
  return predict_features(extract_features(image, features_), image.width(), image.height());
}

ProbMapStack SegmenterModel::predict(const PreparedImage& image) const {
  const auto* fi = dynamic_cast<const FeatureImage*>(&image);
  if (!fi) throw ConfigError("logistic model needs images prepared by LogisticBackend");
  return predict_features(fi->features(), fi->width(), fi->height()).probs;
}

namespace {
constexpr char kModelMagic[] = "WSM1\n";
constexpr std::size_t kModelMagicLen = 5;
}  // namespace

std::string SegmenterModel::serialize() const {
  std::string out(kModelMagic, kModelMagicLen);
  out += std::to_string(weights_.classes) + " " + std::to_string(weights_.features) + "\n";
  for (double w : weights_.data) append_le(out, w);
  return out;
}

SegmenterModel SegmenterModel::deserialize(const std::string& bytes, const FeatureConfig& features,
                                           const std::string& where) {
  if (bytes.compare(0, kModelMagicLen, kModelMagic, kModelMagicLen) != 0)
    throw FormatError(where + ": not a model file (bad magic)");
  const std::size_t eol = bytes.find('\n', kModelMagicLen);
  if (eol == std::string::npos) throw FormatError(where + ": truncated header");
  std::istringstream header(bytes.substr(kModelMagicLen, eol - kModelMagicLen));
  long long l = 0, d = 0;
  if (!(header >> l >> d) || l < 1 || d < 0) throw FormatError(where + ": malformed header");
  WeightMatrix w(static_cast<std::size_t>(l), static_cast<std::size_t>(d));
  if (bytes.size() != eol + 1 + 8 * w.data.size())
    throw FormatError(where + ": payload size does not match header");
  for (std::size_t k = 0; k < w.data.size(); ++k) w.data[k] = read_le_double(bytes.data() + eol + 1 + 8 * k);
  // no channel count on disk: D must fit the layout for some number of channels
  const std::size_t per_channel = features.dimension(1) - (features.include_coords ? 2 : 0);
  const std::size_t extra = features.include_coords ? 2 : 0;
  const auto dd = static_cast<std::size_t>(d);
  if (dd <= extra || (dd - extra) % per_channel != 0)
    throw ConfigError(where + ": " + std::to_string(d) + " features cannot come from the given feature configuration");
  return SegmenterModel(std::move(w), features);
}

void SegmenterModel::save(const std::filesystem::path& path) const {
  write_file_bytes(path, serialize());
}

SegmenterModel SegmenterModel::load(const std::filesystem::path& path,
                                    const FeatureConfig& features) {
  return deserialize(read_file_bytes(path), features, path.string());
}

std::vector<std::uint8_t> pixel_major_targets(const MaskStack& mask) {
  const std::size_t n = mask.pixel_count(), classes = mask.classes();
  std::vector<std::uint8_t> t(n * classes);
  for (std::size_t l = 0; l < classes; ++l) {
    auto plane = mask.plane(l);
    for (std::size_t i = 0; i < n; ++i) t[i * classes + l] = plane[i];
  }
  return t;
}

namespace {

void check_pair(const SegmenterModel& model, const ImageTensor& image, const MaskStack& mask) {
  if (mask.width() != image.width() || mask.height() != image.height())
    throw ConfigError("mask dimensions do not match the image");
  if (mask.classes() != model.label_count())
    throw ConfigError("mask class count does not match the model");
}

double penalty(const WeightMatrix& w) {
  double s = 0.0;
  for (std::size_t l = 0; l < w.classes; ++l)
    for (std::size_t j = 0; j < w.features; ++j) s += w.weight(l, j) * w.weight(l, j);
  return s;
}

}  // namespace

double nll_loss(const SegmenterModel& model, const ImageTensor& image, const MaskStack& mask,
                double l2_penalty) {
  check_pair(model, image, mask);
  const FeatureMatrix f = extract_features(image, model.feature_config());
  const auto targets = pixel_major_targets(mask);
  double loss = parallel::nll_and_gradient(f, targets, model.weights(), {}, nullptr);
  if (l2_penalty > 0.0) loss += l2_penalty * penalty(model.weights());
  return loss;
}

WeightMatrix gradient(const SegmenterModel& model, const ImageTensor& image, const MaskStack& mask,
                      double l2_penalty) {
  check_pair(model, image, mask);
  const FeatureMatrix f = extract_features(image, model.feature_config());
  const auto targets = pixel_major_targets(mask);
  WeightMatrix g;
  parallel::nll_and_gradient(f, targets, model.weights(), {}, &g);
  if (l2_penalty > 0.0) {
    const WeightMatrix& w = model.weights();
    for (std::size_t l = 0; l < w.classes; ++l)
      for (std::size_t j = 0; j < w.features; ++j) g.weight(l, j) += 2.0 * l2_penalty * w.weight(l, j);
  }
  return g;
}

SegmenterModel train_on_features(std::span<const FeatureExample> data, std::size_t label_count,
                                 const TrainConfig& cfg, const FeatureConfig& features) {
  cfg.validate();
  if (data.empty()) throw ConfigError("training needs at least one image");
  const std::size_t d = data.front().features->cols;

  std::size_t total = 0;
  for (const auto& ex : data) {
    if (ex.features->cols != d) throw ConfigError("training images disagree on feature dimension");
    if (ex.mask->classes() != label_count || ex.mask->pixel_count() != ex.features->rows)
      throw ConfigError("training mask does not match its image");
    total += ex.features->rows;
  }

  // Pool all pixels, then standardize each column.
  FeatureMatrix pool(total, d);
  std::vector<std::uint8_t> targets(total * label_count);
  std::size_t offset = 0;
  for (const auto& ex : data) {
    std::copy(ex.features->data.begin(), ex.features->data.end(),
              pool.data.begin() + static_cast<std::ptrdiff_t>(offset * d));
    const auto t = pixel_major_targets(*ex.mask);
    std::copy(t.begin(), t.end(), targets.begin() + static_cast<std::ptrdiff_t>(offset * label_count));
    offset += ex.features->rows;
  }
  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += pool(i, j);
  for (double& m : mean) m /= static_cast<double>(total);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = pool(i, j) - mean[j];
      var[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double s = std::sqrt(var[j] / static_cast<double>(total));
    scale[j] = s > 1e-12 ? s : 1.0;
  }
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = 0; j < d; ++j) pool(i, j) = (pool(i, j) - mean[j]) / scale[j];

  WeightMatrix v(label_count, d), grad;
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::min(cfg.minibatch_pixels, total);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.rng_seed, "sgd-epoch", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < total; start += batch) {
      const std::size_t count = std::min(batch, total - start);
      const std::span<const std::size_t> rows(order.data() + start, count);
      const double loss = parallel::nll_and_gradient(pool, targets, v, rows, &grad);
      if (!std::isfinite(loss))
        throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + " at pixel offset " +
                            std::to_string(start));
      const double inv = 1.0 / static_cast<double>(count);
      for (std::size_t l = 0; l < label_count; ++l) {
        for (std::size_t j = 0; j < d; ++j)
          v.weight(l, j) -= cfg.learning_rate * (grad.weight(l, j) * inv + 2.0 * cfg.l2_penalty * v.weight(l, j));
        v.bias(l) -= cfg.learning_rate * grad.bias(l) * inv;
      }
    }
  }

  // w_j = v_j / s_j, b = v_b - sum_j v_j m_j / s_j
  WeightMatrix w(label_count, d);
  for (std::size_t l = 0; l < label_count; ++l) {
    double b = v.bias(l);
    for (std::size_t j = 0; j < d; ++j) {
      w.weight(l, j) = v.weight(l, j) / scale[j];
      b -= w.weight(l, j) * mean[j];
    }
    w.bias(l) = b;
  }
  for (double x : w.data)
    if (!std::isfinite(x)) throw TrainingError("training produced non-finite weights");
  return SegmenterModel(std::move(w), features);
}

SegmenterModel train(std::span<const LabeledImage> data, const TrainConfig& cfg,
                     const FeatureConfig& features) {
  cfg.validate();
  if (data.empty()) throw ConfigError("training needs at least one image");
  std::vector<FeatureMatrix> feats;
  feats.reserve(data.size());
  for (const auto& ex : data) {
    if (ex.mask->width() != ex.image->width() || ex.mask->height() != ex.image->height())
      throw ConfigError("training mask does not match its image");
    feats.push_back(extract_features(*ex.image, features));
  }
  std::vector<FeatureExample> fx;
  for (std::size_t k = 0; k < data.size(); ++k) fx.push_back({&feats[k], data[k].mask});
  return train_on_features(fx, data.front().mask->classes(), cfg, features);
}

std::shared_ptr<const PreparedImage> LogisticBackend::prepare(const ImageTensor& image) const {
  return std::make_shared<FeatureImage>(image.width(), image.height(),
                                        extract_features(image, features_));
}

std::unique_ptr<SegmentationModel> LogisticBackend::train(std::span<const TrainingExample> examples,
                                                          std::size_t label_count,
                                                          std::uint64_t seed) const {
  std::vector<FeatureExample> fx;
  fx.reserve(examples.size());
  for (const auto& ex : examples) {
    const auto* fi = dynamic_cast<const FeatureImage*>(ex.image);
    if (!fi) throw ConfigError("LogisticBackend can only train on images it prepared");
    fx.push_back({&fi->features(), ex.mask});
  }
  TrainConfig cfg = train_;
  cfg.rng_seed = seed;
  return std::make_unique<SegmenterModel>(train_on_features(fx, label_count, cfg, features_));
}

}  // namespace wsseg
