#pragma once

#include <vector>

#include "wsseg/types.hpp"

namespace wsseg {

struct InitConfig {
  /// Disk radius as a fraction of the image width.
  double sigma_fraction = 0.06;

  void validate() const;
  double radius_for(int width) const { return sigma_fraction * width; }
};

/// Default sweep grid, as fractions of the image width.
inline std::vector<double> default_sigma_grid() { return {0.03, 0.06, 0.12}; }

/// Pixel i of class l is set iff some keypoint of class l is within Euclidean distance
/// sigma_fraction * width of i (inclusive). Class planes are independent; disks clip at
/// the image border.
MaskStack init_masks_from_keypoints(const ImageTensor& image, const KeypointAnnotation& keypoints,
                                    const LabelSpace& labels, const InitConfig& cfg);

}  // namespace wsseg
