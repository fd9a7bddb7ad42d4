#pragma once

// Core value types shared by every stage of the pipeline.
//
// Pixel index convention: i = y * width + x (row-major).
// Per-class stacks are stored class-major: value(l, i) lives at l * width * height + i.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wsseg {

/// Ordered set of class names. The background class is derived, never a member.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> names);

  std::size_t count() const { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> index_of(const std::string& name) const;

  /// Default names "class0", "class1", ...
  static LabelSpace numbered(std::size_t count);

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> names_;
};

/// H x W x C image, interleaved channels, values in [0,1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int width, int height, int channels);
  ImageTensor(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  std::span<const double> data() const { return data_; }

  bool operator==(const ImageTensor&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

struct Keypoint {
  std::size_t class_index = 0;
  int x = 0;
  int y = 0;
  bool operator==(const Keypoint&) const = default;
};

/// A pixel known to carry no class at all.
struct BackgroundPoint {
  int x = 0;
  int y = 0;
  bool operator==(const BackgroundPoint&) const = default;
};

/// Weak labels of one image.
struct KeypointAnnotation {
  std::vector<Keypoint> entries;
  std::vector<BackgroundPoint> background;

  bool has_class(std::size_t class_index) const;
  std::size_t count_for(std::size_t class_index) const;

  /// Throws ConfigError when a point lies outside width x height or its class is >= class_count.
  void validate(int width, int height, std::size_t class_count) const;

  bool operator==(const KeypointAnnotation&) const = default;
};

/// Binary per-pixel, per-class labels. Classes may overlap.
class MaskStack {
 public:
  MaskStack() = default;
  MaskStack(int width, int height, std::size_t classes);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t classes() const { return classes_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  bool get(std::size_t l, std::size_t i) const { return bits_[offset(l, i)] != 0; }
  void set(std::size_t l, std::size_t i, bool value) { bits_[offset(l, i)] = value ? 1 : 0; }
  bool get(std::size_t l, int x, int y) const { return get(l, pixel(x, y)); }

  std::span<const std::uint8_t> plane(std::size_t l) const {
    return {bits_.data() + l * pixel_count(), pixel_count()};
  }
  std::span<std::uint8_t> plane(std::size_t l) {
    return {bits_.data() + l * pixel_count(), pixel_count()};
  }
  std::size_t count(std::size_t l) const;

  std::size_t pixel(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  bool operator==(const MaskStack&) const = default;

 private:
  std::size_t offset(std::size_t l, std::size_t i) const { return l * pixel_count() + i; }

  int width_ = 0;
  int height_ = 0;
  std::size_t classes_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Per-class sigmoid posteriors, stored as float32. No normalization across classes.
class ProbMapStack {
 public:
  ProbMapStack() = default;
  ProbMapStack(int width, int height, std::size_t classes, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t classes() const { return classes_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  float get(std::size_t l, std::size_t i) const { return values_[l * pixel_count() + i]; }
  void set(std::size_t l, std::size_t i, float p) { values_[l * pixel_count() + i] = p; }
  float get(std::size_t l, int x, int y) const {
    return get(l, static_cast<std::size_t>(y) * width_ + x);
  }

  std::span<const float> plane(std::size_t l) const {
    return {values_.data() + l * pixel_count(), pixel_count()};
  }
  std::span<float> plane(std::size_t l) {
    return {values_.data() + l * pixel_count(), pixel_count()};
  }
  std::span<const float> values() const { return values_; }

  bool operator==(const ProbMapStack&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::size_t classes_ = 0;
  std::vector<float> values_;
};

/// Pre-sigmoid scores g, class-major like ProbMapStack.
struct LogitMapStack {
  int width = 0;
  int height = 0;
  std::size_t classes = 0;
  std::vector<double> values;

  double get(std::size_t l, std::size_t i) const {
    return values[l * static_cast<std::size_t>(width) * height + i];
  }
};

/// Image plus its weak labels: everything a training stage is allowed to see.
struct WeakRecord {
  std::string stem;
  ImageTensor image;
  KeypointAnnotation keypoints;
};

/// Records with ground truth kept in a separate vector so training code never receives it.
struct Dataset {
  LabelSpace labels;
  std::vector<WeakRecord> records;
  std::vector<std::optional<MaskStack>> ground_truth;  // parallel to records

  bool has_full_ground_truth() const;
};

}  // namespace wsseg
