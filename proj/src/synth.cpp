#include "wsseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "wsseg/error.hpp"
#include "wsseg/io.hpp"
#include "wsseg/rng.hpp"

namespace wsseg {

void SynthConfig::validate() const {
  if (image_size < 16) throw ConfigError("synth.image_size must be >= 16");
  if (class_count < 2) throw ConfigError("synth.class_count must be >= 2");
  if (shapes_min < 0 || shapes_max < shapes_min) throw ConfigError("synth.shapes_min/shapes_max form an invalid range");
  if (shape_kinds.empty()) throw ConfigError("synth.shape_kinds must not be empty");
  if (!(shape_size > 0.0)) throw ConfigError("synth.shape_size must be > 0");
  if (!(size_variation >= 1.0)) throw ConfigError("synth.size_variation must be >= 1");
  if (!(overlap_probability >= 0.0 && overlap_probability <= 1.0))
    throw ConfigError("synth.overlap_probability must lie in [0, 1]");
  if (!(noise >= 0.0)) throw ConfigError("synth.noise must be >= 0");
  if (!(texture >= 0.0)) throw ConfigError("synth.texture must be >= 0");
  if (distractors_max < 0) throw ConfigError("synth.distractors_max must be >= 0");
  if (keypoints_per_class < 1) throw ConfigError("synth.keypoints_per_class must be >= 1");
  if (background_keypoints < 0) throw ConfigError("synth.background_keypoints must be >= 0");
}

namespace {

constexpr double kBackgroundTone = 0.35;

// Direction of class l's color offset: channel axes for up to three classes, otherwise
// evenly spaced hues in the plane orthogonal to gray.
std::array<double, 3> class_direction(std::size_t l, std::size_t class_count) {
  if (class_count <= 3) {
    std::array<double, 3> d{0.0, 0.0, 0.0};
    d[l] = 1.0;
    return d;
  }
  const double theta = 2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(class_count);
  const std::array<double, 3> u{1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0};
  const std::array<double, 3> v{1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0), -2.0 / std::sqrt(6.0)};
  return {std::cos(theta) * u[0] + std::sin(theta) * v[0], std::cos(theta) * u[1] + std::sin(theta) * v[1],
          std::cos(theta) * u[2] + std::sin(theta) * v[2]};
}

struct Shape {
  ShapeKind kind;
  double cx, cy, half_w, half_h;
  std::uint32_t labels;  // bit per class

  bool contains(int x, int y) const {
    const double dx = x - cx, dy = y - cy;
    if (kind == ShapeKind::disk) return dx * dx + dy * dy <= half_w * half_w;
    return std::abs(dx) <= half_w && std::abs(dy) <= half_h;
  }
};

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

std::array<double, 3> class_color(const SynthConfig& cfg, std::size_t class_index) {
  const auto d = class_direction(class_index, cfg.class_count);
  return {kBackgroundTone + cfg.color_contrast * d[0], kBackgroundTone + cfg.color_contrast * d[1],
          kBackgroundTone + cfg.color_contrast * d[2]};
}

SampledKeypoints sample_keypoints(const MaskStack& gt, int k, std::uint64_t seed, int background_points) {
  if (k < 1) throw ConfigError("keypoints per class must be >= 1");
  SampledKeypoints out;
  const int w = gt.width();
  for (std::size_t l = 0; l < gt.classes(); ++l) {
    std::vector<std::size_t> pixels;
    auto plane = gt.plane(l);
    for (std::size_t i = 0; i < plane.size(); ++i)
      if (plane[i]) pixels.push_back(i);
    if (pixels.empty()) continue;
    Rng rng(derive_seed(seed, "class", l));
    const std::size_t take = std::min(pixels.size(), static_cast<std::size_t>(k));
    if (take < static_cast<std::size_t>(k))
      out.shortfalls.push_back({0, l, static_cast<std::size_t>(k), pixels.size()});
    for (std::size_t s = 0; s < take; ++s) {
      const std::size_t j = s + static_cast<std::size_t>(rng.below(pixels.size() - s));
      std::swap(pixels[s], pixels[j]);
      out.keypoints.entries.push_back(
          {l, static_cast<int>(pixels[s] % w), static_cast<int>(pixels[s] / w)});
    }
  }
  if (background_points > 0) {
    const MaskStack bg = [&] {
      MaskStack m(gt.width(), gt.height(), 1);
      for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
        bool any = false;
        for (std::size_t l = 0; l < gt.classes(); ++l) any = any || gt.get(l, i);
        m.set(0, i, !any);
      }
      return m;
    }();
    std::vector<std::size_t> pixels;
    for (std::size_t i = 0; i < bg.pixel_count(); ++i)
      if (bg.get(0, i)) pixels.push_back(i);
    Rng rng(derive_seed(seed, "background"));
    const std::size_t take = std::min(pixels.size(), static_cast<std::size_t>(background_points));
    for (std::size_t s = 0; s < take; ++s) {
      const std::size_t j = s + static_cast<std::size_t>(rng.below(pixels.size() - s));
      std::swap(pixels[s], pixels[j]);
      out.keypoints.background.push_back({static_cast<int>(pixels[s] % w), static_cast<int>(pixels[s] / w)});
    }
  }
  return out;
}

SyntheticSet generate(const SynthConfig& cfg, std::size_t n_images) {
  cfg.validate();
  SyntheticSet out;
  out.dataset.labels = LabelSpace::numbered(cfg.class_count);
  const int size = cfg.image_size;
  const std::size_t classes = cfg.class_count;

  std::vector<std::array<double, 3>> offsets(classes);
  for (std::size_t l = 0; l < classes; ++l) {
    const auto d = class_direction(l, classes);
    offsets[l] = {cfg.color_contrast * d[0], cfg.color_contrast * d[1], cfg.color_contrast * d[2]};
  }

  for (std::size_t j = 0; j < n_images; ++j) {
    Rng rng(derive_seed(cfg.rng_seed, "image", j));
    const double log_range = 0.5 * std::log(cfg.size_variation);
    const double scale = std::exp(rng.uniform(-log_range, log_range));

    auto random_shape = [&](std::uint32_t labels) {
      Shape s;
      s.kind = cfg.shape_kinds[rng.below(cfg.shape_kinds.size())];
      const double h = std::max(1.5, cfg.shape_size * size * scale * rng.uniform(0.85, 1.15));
      const double aspect = std::sqrt(rng.uniform(0.5, 2.0));
      s.half_w = s.kind == ShapeKind::disk ? h : h * aspect;
      s.half_h = s.kind == ShapeKind::disk ? h : h / aspect;
      s.cx = rng.uniform(0.5 * s.half_w, size - 1 - 0.5 * s.half_w);
      s.cy = rng.uniform(0.5 * s.half_h, size - 1 - 0.5 * s.half_h);
      s.labels = labels;
      return s;
    };

    std::vector<Shape> shapes;
    const int n_shapes = rng.between(cfg.shapes_min, cfg.shapes_max);
    for (int s = 0; s < n_shapes; ++s) {
      const auto primary = static_cast<std::size_t>(rng.below(classes));
      std::uint32_t labels = 1u << primary;
      if (rng.bernoulli(cfg.overlap_probability)) {
        const auto other = (primary + 1 + static_cast<std::size_t>(rng.below(classes - 1))) % classes;
        labels |= 1u << other;
      }
      shapes.push_back(random_shape(labels));
    }
    std::vector<std::pair<Shape, std::size_t>> distractors;
    const int n_distractors = rng.between(0, cfg.distractors_max);
    for (int s = 0; s < n_distractors; ++s) {
      const auto look = static_cast<std::size_t>(rng.below(classes));
      distractors.emplace_back(random_shape(0), look);
    }

    // Low-frequency luminance texture.
    const double fx = rng.uniform(0.5, 2.0), fy = rng.uniform(0.5, 2.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    MaskStack gt(size, size, classes);
    ImageTensor img(size, size, 3);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        std::uint32_t labels = 0;
        for (const auto& s : shapes)
          if (s.contains(x, y)) labels |= s.labels;
        const double tex = cfg.texture * std::sin(2.0 * std::numbers::pi * (fx * x + fy * y) / size + phase);
        std::array<double, 3> c{kBackgroundTone + tex, kBackgroundTone + tex, kBackgroundTone + tex};
        if (labels) {
          for (std::size_t l = 0; l < classes; ++l)
            if (labels & (1u << l)) {
              gt.set(l, gt.pixel(x, y), true);
              for (int ch = 0; ch < 3; ++ch) c[ch] += offsets[l][ch];
            }
        } else {
          for (const auto& [s, look] : distractors)
            if (s.contains(x, y)) {
              for (int ch = 0; ch < 3; ++ch) c[ch] += cfg.distractor_strength * offsets[look][ch];
              break;
            }
        }
        for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = quantize(c[ch] + cfg.noise * rng.normal());
      }
    }

    auto sampled = sample_keypoints(gt, cfg.keypoints_per_class, derive_seed(cfg.rng_seed, "keypoints", j),
                                    cfg.background_keypoints);
    for (auto& s : sampled.shortfalls) {
      s.record = j;
      out.shortfalls.push_back(s);
    }
    char stem[32];
    std::snprintf(stem, sizeof stem, "img%04zu", j);
    out.dataset.records.push_back({stem, std::move(img), std::move(sampled.keypoints)});
    out.dataset.ground_truth.emplace_back(std::move(gt));
  }
  return out;
}

std::vector<KeypointShortfall> resample_keypoints(Dataset& dataset, int k, std::uint64_t seed,
                                                  int background_points) {
  if (!dataset.has_full_ground_truth()) throw ConfigError("resampling keypoints needs ground truth for every record");
  std::vector<KeypointShortfall> shortfalls;
  for (std::size_t r = 0; r < dataset.records.size(); ++r) {
    auto sampled = sample_keypoints(*dataset.ground_truth[r], k, derive_seed(seed, "keypoints", r), background_points);
    for (auto& s : sampled.shortfalls) {
      s.record = r;
      shortfalls.push_back(s);
    }
    dataset.records[r].keypoints = std::move(sampled.keypoints);
  }
  return shortfalls;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir, const std::string& manifest_name) {
  std::filesystem::create_directories(dir);
  DatasetManifest manifest;
  manifest.labels = dataset.labels;
  for (std::size_t r = 0; r < dataset.records.size(); ++r) {
    const auto& rec = dataset.records[r];
    ManifestRecord mr;
    mr.image = dir / (rec.stem + (rec.image.channels() == 3 ? ".ppm" : ".pgm"));
    write_image(rec.image, mr.image);
    mr.info = {rec.image.width(), rec.image.height(), rec.image.channels()};
    mr.keypoints = rec.keypoints;
    if (r < dataset.ground_truth.size() && dataset.ground_truth[r]) {
      write_mask_stack(*dataset.ground_truth[r], dir / "gt", rec.stem);
      for (std::size_t l = 0; l < dataset.labels.count(); ++l) mr.gt_masks.push_back(mask_path(dir / "gt", rec.stem, l));
    }
    manifest.records.push_back(std::move(mr));
  }
  save_manifest(manifest, dir / manifest_name);
}

SynthConfig benchmark_config() {
  SynthConfig cfg;
  cfg.image_size = 64;
  cfg.class_count = 3;
  cfg.shapes_min = 1;
  cfg.shapes_max = 3;
  cfg.shape_size = 0.12;
  cfg.size_variation = 3.0;
  cfg.overlap_probability = 0.2;
  cfg.noise = 0.1;
  cfg.rng_seed = 20180716;
  return cfg;
}

BenchmarkSplit make_benchmark(const SynthConfig& cfg, std::size_t train_images, std::size_t test_images) {
  BenchmarkSplit split;
  split.config = cfg;
  SynthConfig train_cfg = cfg, test_cfg = cfg;
  train_cfg.rng_seed = derive_seed(cfg.rng_seed, "train");
  test_cfg.rng_seed = derive_seed(cfg.rng_seed, "test");
  split.train = generate(train_cfg, train_images).dataset;
  split.test = generate(test_cfg, test_images).dataset;
  return split;
}

}  // namespace wsseg
