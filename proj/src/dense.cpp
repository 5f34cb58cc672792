// SPDX-License-Identifier: Apache-2.0
#include "rvdet/dense.hpp"

#include <string>

#include "rvdet/error.hpp"

namespace rvdet {

void DenseOutput::check_shape(std::uint32_t expected_height, std::uint32_t expected_width) const {
  const std::size_t pixels = static_cast<std::size_t>(expected_height) * expected_width;
  if (height != expected_height || width != expected_width ||
      logits.size() != pixels * kNumCategories || regression.size() != pixels * kRegressionDims) {
    throw Error(ErrorCode::kShapeMismatch,
                "dense output is " + std::to_string(height) + "x" + std::to_string(width) +
                    ", expected " + std::to_string(expected_height) + "x" +
                    std::to_string(expected_width));
  }
}

}  // namespace rvdet
