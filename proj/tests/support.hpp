#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "wsseg/rng.hpp"
#include "wsseg/types.hpp"

namespace wsseg::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("wsseg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ImageTensor random_image(int w, int h, int c, Rng& rng) {
  ImageTensor img(w, h, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k) img.at(x, y, k) = rng.uniform();
  return img;
}

inline MaskStack random_mask(int w, int h, std::size_t classes, double p, Rng& rng) {
  MaskStack m(w, h, classes);
  for (std::size_t l = 0; l < classes; ++l)
    for (std::size_t i = 0; i < m.pixel_count(); ++i) m.set(l, i, rng.bernoulli(p));
  return m;
}

inline ProbMapStack random_probs(int w, int h, std::size_t classes, Rng& rng) {
  ProbMapStack p(w, h, classes);
  for (std::size_t l = 0; l < classes; ++l)
    for (std::size_t i = 0; i < p.pixel_count(); ++i) p.set(l, i, static_cast<float>(rng.uniform()));
  return p;
}

}  // namespace wsseg::test
