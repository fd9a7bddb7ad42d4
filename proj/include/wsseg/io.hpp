#pragma once

// File formats:
//   images        binary PPM (P6) or PGM (P5), 8-bit; values normalized to [0,1] on load
//   mask stacks   one P5 file per class, pixels exactly 0 or 255, named <stem>.class<k>.pgm
//   prob maps     "FPM1\n", "<width> <height> <classes>\n", then class-major row-major
//                 little-endian float32
//   manifest      JSON, see load_manifest

#include <filesystem>
#include <string>
#include <vector>

#include "wsseg/types.hpp"

namespace wsseg {

struct PnmInfo {
  int width = 0;
  int height = 0;
  int channels = 0;  // 3 for P6, 1 for P5
};

PnmInfo read_pnm_info(const std::filesystem::path& path);
ImageTensor read_image(const std::filesystem::path& path);

/// Writes P6 for 3-channel and P5 for 1-channel images. Values are rounded to 8 bits.
void write_image(const ImageTensor& image, const std::filesystem::path& path);

std::filesystem::path mask_path(const std::filesystem::path& dir, const std::string& stem,
                                std::size_t class_index);
void write_mask_stack(const MaskStack& mask, const std::filesystem::path& dir,
                      const std::string& stem);
MaskStack read_mask_stack(const std::filesystem::path& dir, const std::string& stem, int width,
                          int height, std::size_t classes);
/// Reads a single mask plane file into class `class_index` of `mask`.
void read_mask_plane(const std::filesystem::path& path, MaskStack& mask, std::size_t class_index);

void write_prob_map(const ProbMapStack& probs, const std::filesystem::path& path);
ProbMapStack read_prob_map(const std::filesystem::path& path);

struct ManifestRecord {
  std::filesystem::path image;  // resolved against the manifest directory
  PnmInfo info;
  KeypointAnnotation keypoints;
  std::vector<std::filesystem::path> gt_masks;  // empty, or one per class
};

struct DatasetManifest {
  LabelSpace labels;
  std::vector<ManifestRecord> records;
};

/// Manifest document:
///
///   { "classes": ["grasp", "cut"],            // or an integer class count
///     "records": [
///       { "image": "img0.ppm",
///         "keypoints": [ {"class": 0, "x": 5, "y": 7} ],   // class by index or name
///         "background_keypoints": [ {"x": 1, "y": 1} ],    // optional
///         "gt_masks": ["img0.class0.pgm", "img0.class1.pgm"] } ] }   // optional
///
/// Relative paths resolve against the manifest's directory. Image headers are read to
/// validate keypoint bounds; errors name the offending record index.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Paths are written relative to the manifest's directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Loads images and (when present) ground truth. Record stems come from image file names.
Dataset load_dataset(const DatasetManifest& manifest);

/// Little-endian byte helpers shared with model serialization.
void append_le(std::string& out, float value);
void append_le(std::string& out, double value);
float read_le_float(const char* bytes);
double read_le_double(const char* bytes);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace wsseg
