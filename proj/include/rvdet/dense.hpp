// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rvdet/category.hpp"

namespace rvdet {

inline constexpr std::size_t kRegressionDims = 8;

/// Per-pixel network output: one pre-sigmoid logit per category and the
/// 8 regression channels (dx, dy, dz, log l, log w, log h, sin, cos).
/// Pixel-major layout: logits[pixel * kNumCategories + k],
/// regression[pixel * kRegressionDims + k].
struct DenseOutput {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> logits;
  std::vector<double> regression;

  DenseOutput() = default;
  DenseOutput(std::uint32_t h, std::uint32_t w, double logit_fill = 0.0)
      : height(h),
        width(w),
        logits(static_cast<std::size_t>(h) * w * kNumCategories, logit_fill),
        regression(static_cast<std::size_t>(h) * w * kRegressionDims, 0.0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

  std::span<const double, kNumCategories> logits_at(std::size_t pixel) const {
    return std::span<const double, kNumCategories>(logits.data() + pixel * kNumCategories,
                                                   kNumCategories);
  }
  std::span<double, kNumCategories> logits_at(std::size_t pixel) {
    return std::span<double, kNumCategories>(logits.data() + pixel * kNumCategories,
                                             kNumCategories);
  }
  std::span<const double, kRegressionDims> regression_at(std::size_t pixel) const {
    return std::span<const double, kRegressionDims>(regression.data() + pixel * kRegressionDims,
                                                    kRegressionDims);
  }
  std::span<double, kRegressionDims> regression_at(std::size_t pixel) {
    return std::span<double, kRegressionDims>(regression.data() + pixel * kRegressionDims,
                                              kRegressionDims);
  }

  /// Throws Error(kShapeMismatch) unless sizes agree with height x width.
  void check_shape(std::uint32_t expected_height, std::uint32_t expected_width) const;

  friend bool operator==(const DenseOutput&, const DenseOutput&) = default;
};

}  // namespace rvdet
