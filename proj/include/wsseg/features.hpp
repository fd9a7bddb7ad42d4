#pragma once

#include <vector>

#include "wsseg/kernels.hpp"
#include "wsseg/types.hpp"

namespace wsseg {

/// Hand-crafted per-pixel features. Column order, per channel c:
///   raw value, box blur at each smoothing scale, then (local mean, local variance) for each
///   window radius; followed by (x / width, y / height) when include_coords is set.
struct FeatureConfig {
  std::vector<int> window_radii = {2, 5};
  bool include_coords = false;
  std::vector<int> smoothing_scales = {1};

  void validate() const;
  std::size_t dimension(int channels) const;

  bool operator==(const FeatureConfig&) const = default;
};

FeatureMatrix extract_features(const ImageTensor& image, const FeatureConfig& cfg);

/// Same features computed with the serial reference kernels.
FeatureMatrix extract_features_reference(const ImageTensor& image, const FeatureConfig& cfg);

}  // namespace wsseg
