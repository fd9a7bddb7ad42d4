#include "wsseg/features.hpp"

#include "wsseg/error.hpp"

namespace wsseg {

void FeatureConfig::validate() const {
  for (int r : window_radii)
    if (r < 1) throw ConfigError("features.window_radii entries must be >= 1");
  for (int s : smoothing_scales)
    if (s < 1) throw ConfigError("features.smoothing_scales entries must be >= 1");
}

std::size_t FeatureConfig::dimension(int channels) const {
  return static_cast<std::size_t>(channels) *
             (1 + smoothing_scales.size() + 2 * window_radii.size()) +
         (include_coords ? 2 : 0);
}

namespace {

struct KernelSet {
  void (*box_mean)(std::span<const double>, int, int, int, std::span<double>);
  void (*mean_variance)(std::span<const double>, int, int, int, std::span<double>,
                        std::span<double>);
};

FeatureMatrix extract_with(const ImageTensor& image, const FeatureConfig& cfg, KernelSet k) {
  cfg.validate();
  const int w = image.width(), h = image.height(), channels = image.channels();
  const std::size_t n = image.pixel_count();
  FeatureMatrix out(n, cfg.dimension(channels));
  const std::size_t per_channel = 1 + cfg.smoothing_scales.size() + 2 * cfg.window_radii.size();

  std::vector<double> plane(n), mean(n), var(n);
  for (int c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) plane[i] = image.data()[i * channels + c];
    std::size_t col = static_cast<std::size_t>(c) * per_channel;
    for (std::size_t i = 0; i < n; ++i) out(i, col) = plane[i];
    ++col;
    for (int s : cfg.smoothing_scales) {
      k.box_mean(plane, w, h, s, mean);
      for (std::size_t i = 0; i < n; ++i) out(i, col) = mean[i];
      ++col;
    }
    for (int r : cfg.window_radii) {
      k.mean_variance(plane, w, h, r, mean, var);
      for (std::size_t i = 0; i < n; ++i) {
        out(i, col) = mean[i];
        out(i, col + 1) = var[i];
      }
      col += 2;
    }
  }
  if (cfg.include_coords) {
    const std::size_t col = static_cast<std::size_t>(channels) * per_channel;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        out(i, col) = static_cast<double>(x) / w;
        out(i, col + 1) = static_cast<double>(y) / h;
      }
  }
  return out;
}

}  // namespace

FeatureMatrix extract_features(const ImageTensor& image, const FeatureConfig& cfg) {
  return extract_with(image, cfg, {parallel::box_mean, parallel::local_mean_variance});
}

FeatureMatrix extract_features_reference(const ImageTensor& image, const FeatureConfig& cfg) {
  return extract_with(image, cfg, {serial::box_mean, serial::local_mean_variance});
}

}  // namespace wsseg
