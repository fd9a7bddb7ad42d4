#pragma once

// Pixel-parallel kernels behind feature extraction and the logistic classifier.
//
// Every kernel has two implementations with the same signature:
//   serial::   straightforward reference loops, kept for testing and benchmarking
//   parallel:: OpenMP versions used by the library
//
// Parallel reductions accumulate over fixed-size row chunks and combine the chunk
// partials in index order, so results do not depend on the number of threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wsseg {

/// Row-major n x D matrix of per-pixel features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// L x (D+1) parameters; each row is [w_0 .. w_{D-1}, bias].
struct WeightMatrix {
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<double> data;

  WeightMatrix() = default;
  WeightMatrix(std::size_t l, std::size_t d) : classes(l), features(d), data(l * (d + 1), 0.0) {}

  std::size_t stride() const { return features + 1; }
  double& weight(std::size_t l, std::size_t j) { return data[l * stride() + j]; }
  double weight(std::size_t l, std::size_t j) const { return data[l * stride() + j]; }
  double& bias(std::size_t l) { return data[l * stride() + features]; }
  double bias(std::size_t l) const { return data[l * stride() + features]; }

  bool operator==(const WeightMatrix&) const = default;
};

/// Numerically stable logistic function.
double sigmoid(double g);
/// log(1 + exp(g)) without overflow.
double softplus(double g);

/// Rows handled per reduction chunk.
inline constexpr std::size_t kReductionChunk = 256;

namespace serial {

/// Mean over the (2r+1)^2 window with edge replication.
void box_mean(std::span<const double> plane, int width, int height, int radius,
              std::span<double> out);

/// Local mean and (population) variance over the (2r+1)^2 window with edge replication.
void local_mean_variance(std::span<const double> plane, int width, int height, int radius,
                         std::span<double> mean, std::span<double> variance);

/// out[i * L + l] = w_l . f_i + b_l
void logits(const FeatureMatrix& features, const WeightMatrix& weights, std::span<double> out);

/// Sum over `rows` (all rows when empty) and classes of the Bernoulli negative log-likelihood.
/// targets[i * L + l] in {0,1}. When `grad` is non-null it receives the gradient of that sum.
double nll_and_gradient(const FeatureMatrix& features, std::span<const std::uint8_t> targets,
                        const WeightMatrix& weights, std::span<const std::size_t> rows,
                        WeightMatrix* grad);

}  // namespace serial

namespace parallel {

void box_mean(std::span<const double> plane, int width, int height, int radius,
              std::span<double> out);
void local_mean_variance(std::span<const double> plane, int width, int height, int radius,
                         std::span<double> mean, std::span<double> variance);
void logits(const FeatureMatrix& features, const WeightMatrix& weights, std::span<double> out);
double nll_and_gradient(const FeatureMatrix& features, std::span<const std::uint8_t> targets,
                        const WeightMatrix& weights, std::span<const std::size_t> rows,
                        WeightMatrix* grad);

}  // namespace parallel

/// Caps OpenMP worker threads (0 leaves the runtime default). Results are unaffected.
void set_thread_limit(int threads);

}  // namespace wsseg
