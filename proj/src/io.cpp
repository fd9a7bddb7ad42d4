#include "wsseg/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wsseg/error.hpp"

namespace wsseg {
namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to '" + path.string() + "'");
}

namespace {

template <typename UInt>
UInt to_little(UInt v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    UInt r = 0;
    for (std::size_t b = 0; b < sizeof(UInt); ++b) r |= ((v >> (8 * b)) & 0xff) << (8 * (sizeof(UInt) - 1 - b));
    return r;
  }
}

// Whitespace/comment-aware tokenizer for the ASCII part of a PNM header.
class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, std::string where) : bytes_(bytes), where_(std::move(where)) {}

  std::string token() {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw FormatError(where_ + ": truncated header");
    return bytes_.substr(start, pos_ - start);
  }

  int integer() {
    std::string t = token();
    for (char c : t)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw FormatError(where_ + ": expected integer in header, got '" + t + "'");
    return std::stoi(t);
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      throw FormatError(where_ + ": missing whitespace before raster");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::string where_;
  std::size_t pos_ = 0;
};

struct Pnm {
  PnmInfo info;
  std::size_t raster_offset = 0;
};

Pnm parse_pnm_header(const std::string& bytes, const std::string& where) {
  HeaderReader hr(bytes, where);
  std::string magic = hr.token();
  Pnm pnm;
  if (magic == "P6") {
    pnm.info.channels = 3;
  } else if (magic == "P5") {
    pnm.info.channels = 1;
  } else {
    throw FormatError(where + ": unsupported magic '" + magic + "' (expected P5 or P6)");
  }
  pnm.info.width = hr.integer();
  pnm.info.height = hr.integer();
  int maxval = hr.integer();
  if (pnm.info.width < 1 || pnm.info.height < 1) throw FormatError(where + ": empty image");
  if (maxval != 255) throw FormatError(where + ": only 8-bit images with maxval 255 are supported");
  pnm.raster_offset = hr.raster_start();
  std::size_t need = static_cast<std::size_t>(pnm.info.width) * pnm.info.height * pnm.info.channels;
  if (bytes.size() < pnm.raster_offset + need) throw FormatError(where + ": truncated raster");
  return pnm;
}

std::string pnm_header(int channels, int width, int height) {
  return std::string(channels == 3 ? "P6" : "P5") + "\n" + std::to_string(width) + " " +
         std::to_string(height) + "\n255\n";
}

}  // namespace

void append_le(std::string& out, float value) {
  std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(value));
  char buf[4];
  std::memcpy(buf, &bits, 4);
  out.append(buf, 4);
}

void append_le(std::string& out, double value) {
  std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(value));
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

float read_le_float(const char* bytes) {
  std::uint32_t bits;
  std::memcpy(&bits, bytes, 4);
  return std::bit_cast<float>(to_little(bits));
}

double read_le_double(const char* bytes) {
  std::uint64_t bits;
  std::memcpy(&bits, bytes, 8);
  return std::bit_cast<double>(to_little(bits));
}

PnmInfo read_pnm_info(const fs::path& path) {
  // Headers are tiny; reading the file keeps one parser for both paths.
  return parse_pnm_header(read_file_bytes(path), path.string()).info;
}

ImageTensor read_image(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  const Pnm pnm = parse_pnm_header(bytes, path.string());
  const std::size_t n = static_cast<std::size_t>(pnm.info.width) * pnm.info.height * pnm.info.channels;
  std::vector<double> data(n);
  for (std::size_t k = 0; k < n; ++k)
    data[k] = static_cast<unsigned char>(bytes[pnm.raster_offset + k]) / 255.0;
  return ImageTensor(pnm.info.width, pnm.info.height, pnm.info.channels, std::move(data));
}

void write_image(const ImageTensor& image, const fs::path& path) {
  if (image.channels() != 1 && image.channels() != 3)
    throw ConfigError("only 1- or 3-channel images can be written as PNM");
  std::string out = pnm_header(image.channels(), image.width(), image.height());
  out.reserve(out.size() + image.data().size());
  for (double v : image.data()) {
    double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(q)));
  }
  write_file_bytes(path, out);
}

fs::path mask_path(const fs::path& dir, const std::string& stem, std::size_t class_index) {
  return dir / (stem + ".class" + std::to_string(class_index) + ".pgm");
}

void write_mask_stack(const MaskStack& mask, const fs::path& dir, const std::string& stem) {
  for (std::size_t l = 0; l < mask.classes(); ++l) {
    std::string out = pnm_header(1, mask.width(), mask.height());
    for (std::uint8_t b : mask.plane(l)) out.push_back(static_cast<char>(b ? 255 : 0));
    write_file_bytes(mask_path(dir, stem, l), out);
  }
}

void read_mask_plane(const fs::path& path, MaskStack& mask, std::size_t class_index) {
  const std::string bytes = read_file_bytes(path);
  const Pnm pnm = parse_pnm_header(bytes, path.string());
  if (pnm.info.channels != 1) throw FormatError(path.string() + ": mask must be a P5 file");
  if (pnm.info.width != mask.width() || pnm.info.height != mask.height())
    throw FormatError(path.string() + ": mask is " + std::to_string(pnm.info.width) + "x" +
                      std::to_string(pnm.info.height) + ", expected " +
                      std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
  auto plane = mask.plane(class_index);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    auto v = static_cast<unsigned char>(bytes[pnm.raster_offset + i]);
    if (v != 0 && v != 255)
      throw FormatError(path.string() + ": mask value " + std::to_string(v) + " at pixel " +
                        std::to_string(i) + " is neither 0 nor 255");
    plane[i] = v ? 1 : 0;
  }
}

MaskStack read_mask_stack(const fs::path& dir, const std::string& stem, int width, int height,
                          std::size_t classes) {
  MaskStack mask(width, height, classes);
  for (std::size_t l = 0; l < classes; ++l) read_mask_plane(mask_path(dir, stem, l), mask, l);
  return mask;
}

namespace {
constexpr char kProbMagic[] = "FPM1\n";
constexpr std::size_t kProbMagicLen = 5;
}  // namespace

void write_prob_map(const ProbMapStack& probs, const fs::path& path) {
  std::string out(kProbMagic, kProbMagicLen);
  out += std::to_string(probs.width()) + " " + std::to_string(probs.height()) + " " +
         std::to_string(probs.classes()) + "\n";
  out.reserve(out.size() + 4 * probs.values().size());
  for (float v : probs.values()) append_le(out, v);
  write_file_bytes(path, out);
}

ProbMapStack read_prob_map(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  const std::string where = path.string();
  if (bytes.compare(0, kProbMagicLen, kProbMagic, kProbMagicLen) != 0)
    throw FormatError(where + ": not a probability map (bad magic)");
  const std::size_t eol = bytes.find('\n', kProbMagicLen);
  if (eol == std::string::npos) throw FormatError(where + ": truncated header");
  std::istringstream header(bytes.substr(kProbMagicLen, eol - kProbMagicLen));
  long long w = 0, h = 0, c = 0;
  std::string trailing;
  if (!(header >> w >> h >> c) || (header >> trailing) || w < 1 || h < 1 || c < 0)
    throw FormatError(where + ": malformed header");
  ProbMapStack probs(static_cast<int>(w), static_cast<int>(h), static_cast<std::size_t>(c));
  const std::size_t n = probs.values().size();
  if (bytes.size() != eol + 1 + 4 * n)
    throw FormatError(where + ": payload size does not match " + std::to_string(w) + "x" +
                      std::to_string(h) + "x" + std::to_string(c));
  const char* p = bytes.data() + eol + 1;
  for (std::size_t l = 0; l < probs.classes(); ++l) {
    auto plane = probs.plane(l);
    for (std::size_t i = 0; i < plane.size(); ++i, p += 4) {
      float v = read_le_float(p);
      if (!(v >= 0.0f && v <= 1.0f))
        throw FormatError(where + ": probability outside [0,1] at class " + std::to_string(l) +
                          ", pixel " + std::to_string(i));
      plane[i] = v;
    }
  }
  return probs;
}

namespace {

int point_coordinate(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw FormatError(where + ": '" + key + "' must be an integer");
  return j[key].get<int>();
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file_bytes(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  if (!doc.is_object()) throw FormatError(path.string() + ": manifest must be a JSON object");

  for (const auto& [key, _] : doc.items())
    if (key != "classes" && key != "records")
      throw FormatError(path.string() + ": unknown key '" + key + "'");

  DatasetManifest manifest;
  if (!doc.contains("classes")) throw FormatError(path.string() + ": missing 'classes'");
  const json& classes = doc["classes"];
  if (classes.is_number_unsigned() || classes.is_number_integer()) {
    if (classes.get<long long>() < 1) throw FormatError(path.string() + ": class count must be >= 1");
    manifest.labels = LabelSpace::numbered(classes.get<std::size_t>());
  } else if (classes.is_array()) {
    manifest.labels = LabelSpace(classes.get<std::vector<std::string>>());
  } else {
    throw FormatError(path.string() + ": 'classes' must be a list of names or a count");
  }
  const std::size_t class_count = manifest.labels.count();

  const json records = doc.value("records", json::array());
  if (!records.is_array()) throw FormatError(path.string() + ": 'records' must be a list");
  for (std::size_t r = 0; r < records.size(); ++r) {
    const json& rec = records[r];
    const std::string where = path.string() + ": record " + std::to_string(r);
    if (!rec.is_object()) throw FormatError(where + ": must be an object");
    for (const auto& [key, _] : rec.items())
      if (key != "image" && key != "keypoints" && key != "background_keypoints" && key != "gt_masks")
        throw FormatError(where + ": unknown key '" + key + "'");
    if (!rec.contains("image") || !rec["image"].is_string())
      throw FormatError(where + ": missing 'image'");

    ManifestRecord out;
    out.image = base / rec["image"].get<std::string>();
    try {
      out.info = read_pnm_info(out.image);
    } catch (const Error& e) {
      throw FormatError(where + ": " + e.what());
    }

    for (const json& kp : rec.value("keypoints", json::array())) {
      Keypoint k;
      if (!kp.contains("class")) throw FormatError(where + ": keypoint without 'class'");
      const json& cls = kp["class"];
      if (cls.is_string()) {
        auto idx = manifest.labels.index_of(cls.get<std::string>());
        if (!idx) throw FormatError(where + ": unknown class '" + cls.get<std::string>() + "'");
        k.class_index = *idx;
      } else if (cls.is_number_integer() && cls.get<long long>() >= 0) {
        k.class_index = cls.get<std::size_t>();
      } else {
        throw FormatError(where + ": keypoint class must be a name or non-negative index");
      }
      k.x = point_coordinate(kp, "x", where);
      k.y = point_coordinate(kp, "y", where);
      out.keypoints.entries.push_back(k);
    }
    for (const json& bp : rec.value("background_keypoints", json::array()))
      out.keypoints.background.push_back(
          {point_coordinate(bp, "x", where), point_coordinate(bp, "y", where)});

    try {
      out.keypoints.validate(out.info.width, out.info.height, class_count);
    } catch (const ConfigError& e) {
      throw FormatError(where + ": " + e.what());
    }

    if (rec.contains("gt_masks")) {
      const json& gt = rec["gt_masks"];
      if (!gt.is_array() || gt.size() != class_count)
        throw FormatError(where + ": 'gt_masks' must list one path per class");
      for (const json& p : gt) {
        out.gt_masks.push_back(base / p.get<std::string>());
        PnmInfo gi;
        try {
          gi = read_pnm_info(out.gt_masks.back());
        } catch (const Error& e) {
          throw FormatError(where + ": " + e.what());
        }
        if (gi.channels != 1 || gi.width != out.info.width || gi.height != out.info.height)
          throw FormatError(where + ": ground-truth mask '" + out.gt_masks.back().string() +
                            "' does not match the image dimensions");
      }
    }
    manifest.records.push_back(std::move(out));
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  auto rel = [&](const fs::path& p) {
    std::error_code ec;
    fs::path r = fs::relative(p, base, ec);
    return (ec || r.empty() ? p : r).generic_string();
  };
  json doc;
  doc["classes"] = manifest.labels.names();
  doc["records"] = json::array();
  for (const auto& rec : manifest.records) {
    json j;
    j["image"] = rel(rec.image);
    j["keypoints"] = json::array();
    for (const auto& k : rec.keypoints.entries)
      j["keypoints"].push_back({{"class", k.class_index}, {"x", k.x}, {"y", k.y}});
    if (!rec.keypoints.background.empty()) {
      j["background_keypoints"] = json::array();
      for (const auto& b : rec.keypoints.background)
        j["background_keypoints"].push_back({{"x", b.x}, {"y", b.y}});
    }
    if (!rec.gt_masks.empty()) {
      j["gt_masks"] = json::array();
      for (const auto& g : rec.gt_masks) j["gt_masks"].push_back(rel(g));
    }
    doc["records"].push_back(std::move(j));
  }
  write_file_bytes(path, doc.dump(2) + "\n");
}

Dataset load_dataset(const DatasetManifest& manifest) {
  Dataset ds;
  ds.labels = manifest.labels;
  for (const auto& rec : manifest.records) {
    WeakRecord wr;
    wr.stem = rec.image.stem().string();
    wr.image = read_image(rec.image);
    wr.keypoints = rec.keypoints;
    ds.records.push_back(std::move(wr));
    if (rec.gt_masks.empty()) {
      ds.ground_truth.emplace_back();
    } else {
      MaskStack gt(rec.info.width, rec.info.height, manifest.labels.count());
      for (std::size_t l = 0; l < rec.gt_masks.size(); ++l) read_mask_plane(rec.gt_masks[l], gt, l);
      ds.ground_truth.emplace_back(std::move(gt));
    }
  }
  return ds;
}

}  // namespace wsseg
