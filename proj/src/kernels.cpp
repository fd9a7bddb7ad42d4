#include "wsseg/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wsseg {

double sigmoid(double g) {
  if (g >= 0.0) return 1.0 / (1.0 + std::exp(-g));
  const double e = std::exp(g);
  return e / (1.0 + e);
}

double softplus(double g) {
  if (g > 0.0) return g + std::log1p(std::exp(-g));
  return std::log1p(std::exp(g));
}

void set_thread_limit(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

namespace {

inline int clamp_index(int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); }

// Per-pixel loss and gradient contribution shared by both reduction orders.
inline double accumulate_pixel(std::span<const double> f, const std::uint8_t* y,
                               const WeightMatrix& w, double* grad) {
  double loss = 0.0;
  const std::size_t d = w.features;
  for (std::size_t l = 0; l < w.classes; ++l) {
    const double* wl = w.data.data() + l * w.stride();
    double g = wl[d];
    for (std::size_t j = 0; j < d; ++j) g += wl[j] * f[j];
    const bool positive = y[l] != 0;
    loss += positive ? softplus(-g) : softplus(g);
    if (grad) {
      const double r = sigmoid(g) - (positive ? 1.0 : 0.0);
      double* gl = grad + l * w.stride();
      for (std::size_t j = 0; j < d; ++j) gl[j] += r * f[j];
      gl[d] += r;
    }
  }
  return loss;
}

}  // namespace

// Both implementations shift the plane by its first value before accumulating; a constant
// window then sums exact zeros, so constant regions report zero variance and their exact mean.

namespace serial {

void local_mean_variance(std::span<const double> plane, int width, int height, int radius,
                         std::span<double> mean, std::span<double> variance) {
  const double shift = plane[0];
  const double count = static_cast<double>(2 * radius + 1) * (2 * radius + 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sum = 0.0;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          sum += plane[static_cast<std::size_t>(clamp_index(y + dy, height)) * width +
                       clamp_index(x + dx, width)] - shift;
      const double m = sum / count;
      double sq = 0.0;
      if (!variance.empty()) {
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            const double v = plane[static_cast<std::size_t>(clamp_index(y + dy, height)) * width +
                                   clamp_index(x + dx, width)] - shift - m;
            sq += v * v;
          }
      }
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      mean[i] = shift + m;
      if (!variance.empty()) variance[i] = sq / count;
    }
  }
}

void box_mean(std::span<const double> plane, int width, int height, int radius,
              std::span<double> out) {
  local_mean_variance(plane, width, height, radius, out, {});
}

void logits(const FeatureMatrix& features, const WeightMatrix& weights, std::span<double> out) {
  const std::size_t d = weights.features;
  for (std::size_t i = 0; i < features.rows; ++i) {
    auto f = features.row(i);
    for (std::size_t l = 0; l < weights.classes; ++l) {
      double g = weights.bias(l);
      for (std::size_t j = 0; j < d; ++j) g += weights.weight(l, j) * f[j];
      out[i * weights.classes + l] = g;
    }
  }
}

double nll_and_gradient(const FeatureMatrix& features, std::span<const std::uint8_t> targets,
                        const WeightMatrix& weights, std::span<const std::size_t> rows,
                        WeightMatrix* grad) {
  if (grad) *grad = WeightMatrix(weights.classes, weights.features);
  const std::size_t n = rows.empty() ? features.rows : rows.size();
  double loss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = rows.empty() ? k : rows[k];
    loss += accumulate_pixel(features.row(i), targets.data() + i * weights.classes, weights,
                             grad ? grad->data.data() : nullptr);
  }
  return loss;
}

}  // namespace serial

namespace parallel {

void local_mean_variance(std::span<const double> plane, int width, int height, int radius,
                         std::span<double> mean, std::span<double> variance) {
  const bool want_var = !variance.empty();
  const double shift = plane[0];
  const std::size_t n = static_cast<std::size_t>(width) * height;
  const double count = static_cast<double>(2 * radius + 1) * (2 * radius + 1);
  std::vector<double> row_sum(n), row_sq(want_var ? n : 0);

  // Horizontal running sums over clamped columns.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    const double* src = plane.data() + static_cast<std::size_t>(y) * width;
    double* s1 = row_sum.data() + static_cast<std::size_t>(y) * width;
    double* s2 = want_var ? row_sq.data() + static_cast<std::size_t>(y) * width : nullptr;
    double a = 0.0, b = 0.0;
    for (int dx = -radius; dx <= radius; ++dx) {
      const double v = src[clamp_index(dx, width)] - shift;
      a += v;
      b += v * v;
    }
    for (int x = 0; x < width; ++x) {
      s1[x] = a;
      if (s2) s2[x] = b;
      const double in = src[clamp_index(x + radius + 1, width)] - shift;
      const double out = src[clamp_index(x - radius, width)] - shift;
      a += in - out;
      b += in * in - out * out;
    }
  }

  // Vertical sums over clamped rows.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double a = 0.0, b = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const std::size_t j = static_cast<std::size_t>(clamp_index(y + dy, height)) * width + x;
        a += row_sum[j];
        if (want_var) b += row_sq[j];
      }
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      const double m = a / count;
      mean[i] = shift + m;
      if (want_var) variance[i] = std::max(0.0, b / count - m * m);
    }
  }
}

void box_mean(std::span<const double> plane, int width, int height, int radius,
              std::span<double> out) {
  local_mean_variance(plane, width, height, radius, out, {});
}

void logits(const FeatureMatrix& features, const WeightMatrix& weights, std::span<double> out) {
  const std::size_t d = weights.features;
  const auto rows = static_cast<std::ptrdiff_t>(features.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto f = features.row(i);
    for (std::size_t l = 0; l < weights.classes; ++l) {
      const double* wl = weights.data.data() + l * weights.stride();
      double g = wl[d];
      for (std::size_t j = 0; j < d; ++j) g += wl[j] * f[j];
      out[i * weights.classes + l] = g;
    }
  }
}

double nll_and_gradient(const FeatureMatrix& features, std::span<const std::uint8_t> targets,
                        const WeightMatrix& weights, std::span<const std::size_t> rows,
                        WeightMatrix* grad) {
  const std::size_t n = rows.empty() ? features.rows : rows.size();
  const std::size_t chunks = (n + kReductionChunk - 1) / kReductionChunk;
  const std::size_t width = weights.data.size();
  std::vector<double> chunk_loss(chunks, 0.0);
  std::vector<double> chunk_grad(grad ? chunks * width : 0, 0.0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(chunks); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    const std::size_t begin = c * kReductionChunk, end = std::min(n, begin + kReductionChunk);
    double* g = grad ? chunk_grad.data() + c * width : nullptr;
    double loss = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t i = rows.empty() ? k : rows[k];
      loss += accumulate_pixel(features.row(i), targets.data() + i * weights.classes, weights, g);
    }
    chunk_loss[c] = loss;
  }

  double loss = 0.0;
  for (double v : chunk_loss) loss += v;
  if (grad) {
    *grad = WeightMatrix(weights.classes, weights.features);
    for (std::size_t c = 0; c < chunks; ++c)
      for (std::size_t k = 0; k < width; ++k) grad->data[k] += chunk_grad[c * width + k];
  }
  return loss;
}

}  // namespace parallel
}  // namespace wsseg
