#include "wsseg/types.hpp"

#include <algorithm>
#include <set>

#include "wsseg/error.hpp"

namespace wsseg {

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ConfigError("label space must contain at least one class");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ConfigError("class names must be non-empty");
    if (!seen.insert(n).second) throw ConfigError("duplicate class name '" + n + "'");
  }
}

std::optional<std::size_t> LabelSpace::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

LabelSpace LabelSpace::numbered(std::size_t count) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < count; ++l) names.push_back("class" + std::to_string(l));
  return LabelSpace(std::move(names));
}

ImageTensor::ImageTensor(int width, int height, int channels)
    : ImageTensor(width, height, channels,
                  std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                      std::max(height, 0) * std::max(channels, 0))) {}

ImageTensor::ImageTensor(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 1 || height < 1 || channels < 1)
    throw ConfigError("image dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(width) * height * channels)
    throw ConfigError("image data length does not match width*height*channels");
}

bool KeypointAnnotation::has_class(std::size_t class_index) const {
  return std::any_of(entries.begin(), entries.end(),
                     [&](const Keypoint& k) { return k.class_index == class_index; });
}

std::size_t KeypointAnnotation::count_for(std::size_t class_index) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(),
      [&](const Keypoint& k) { return k.class_index == class_index; }));
}

void KeypointAnnotation::validate(int width, int height, std::size_t class_count) const {
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& kp = entries[k];
    if (kp.x < 0 || kp.x >= width || kp.y < 0 || kp.y >= height)
      throw ConfigError("keypoint " + std::to_string(k) + " at (" + std::to_string(kp.x) + "," +
                        std::to_string(kp.y) + ") is outside the " + std::to_string(width) + "x" +
                        std::to_string(height) + " image");
    if (kp.class_index >= class_count)
      throw ConfigError("keypoint " + std::to_string(k) + " has class " +
                        std::to_string(kp.class_index) + " but only " +
                        std::to_string(class_count) + " classes exist");
  }
  for (std::size_t k = 0; k < background.size(); ++k) {
    const auto& bp = background[k];
    if (bp.x < 0 || bp.x >= width || bp.y < 0 || bp.y >= height)
      throw ConfigError("background keypoint " + std::to_string(k) + " is outside the image");
  }
}

MaskStack::MaskStack(int width, int height, std::size_t classes)
    : width_(width), height_(height), classes_(classes) {
  if (width < 1 || height < 1) throw ConfigError("mask dimensions must be positive");
  bits_.assign(classes * pixel_count(), 0);
}

std::size_t MaskStack::count(std::size_t l) const {
  auto p = plane(l);
  return static_cast<std::size_t>(std::count(p.begin(), p.end(), std::uint8_t{1}));
}

ProbMapStack::ProbMapStack(int width, int height, std::size_t classes, float fill)
    : width_(width), height_(height), classes_(classes) {
  if (width < 1 || height < 1) throw ConfigError("probability map dimensions must be positive");
  values_.assign(classes * pixel_count(), fill);
}

bool Dataset::has_full_ground_truth() const {
  return ground_truth.size() == records.size() &&
         std::all_of(ground_truth.begin(), ground_truth.end(),
                     [](const auto& g) { return g.has_value(); });
}

}  // namespace wsseg
