#include "wsseg/initialization.hpp"

#include <algorithm>
#include <cmath>

#include "wsseg/error.hpp"

namespace wsseg {

void InitConfig::validate() const {
  if (!(sigma_fraction > 0.0 && sigma_fraction <= 1.0))
    throw ConfigError("init.sigma_fraction must lie in (0, 1]");
}

MaskStack init_masks_from_keypoints(const ImageTensor& image, const KeypointAnnotation& keypoints,
                                    const LabelSpace& labels, const InitConfig& cfg) {
  cfg.validate();
  keypoints.validate(image.width(), image.height(), labels.count());
  MaskStack mask(image.width(), image.height(), labels.count());
  const double sigma = cfg.radius_for(image.width());
  const double sigma_sq = sigma * sigma;
  const int reach = static_cast<int>(std::floor(sigma));

  for (const auto& kp : keypoints.entries) {
    const int y0 = std::max(0, kp.y - reach), y1 = std::min(image.height() - 1, kp.y + reach);
    const int x0 = std::max(0, kp.x - reach), x1 = std::min(image.width() - 1, kp.x + reach);
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - kp.y;
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - kp.x;
        if (dx * dx + dy * dy <= sigma_sq) mask.set(kp.class_index, mask.pixel(x, y), true);
      }
    }
  }
  return mask;
}

}  // namespace wsseg
