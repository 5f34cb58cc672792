// SPDX-License-Identifier: Apache-2.0
#include "rvdet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "rvdet/error.hpp"

namespace rvdet {
namespace {

constexpr std::size_t kPairwiseBlock = 8;

inline double clamp_probability(double c) {
  return std::clamp(c, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

void VflConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "vfl alpha must lie in (0, 1]");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::kInvalidArgument, "vfl gamma must be >= 0");
  }
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= kPairwiseBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double sigmoid(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

double vfl(double probability, double quality, const VflConfig& config) {
  const double c = clamp_probability(probability);
  if (quality > 0.0) {
    return -quality * (quality * std::log(c) + (1.0 - quality) * std::log1p(-c));
  }
  return -config.alpha * std::pow(c, config.gamma) * std::log1p(-c);
}

double vfl_from_logit(double logit, double quality, const VflConfig& config) {
  return vfl(sigmoid(logit), quality, config);
}

double vfl_grad(double logit, double quality, const VflConfig& config) {
  const double c = sigmoid(logit);
  if (c < kProbabilityEpsilon || c > 1.0 - kProbabilityEpsilon) return 0.0;
  if (quality > 0.0) return quality * (c - quality);
  // d/dc [-a c^g log(1-c)] * c (1 - c), expanded to avoid c^(g-1) at c -> 0.
  const double cg = std::pow(c, config.gamma);
  return -config.alpha * (config.gamma * cg * (1.0 - c) * std::log1p(-c) - cg * c);
}

LossWithGradient classification_loss(const DenseOutput& dense,
                                     const ClassificationTargets& targets,
                                     const VflConfig& config) {
  config.validate();
  dense.check_shape(targets.height, targets.width);
  if (targets.quality.size() != targets.pixel_count() ||
      targets.category.size() != targets.pixel_count() ||
      targets.valid.size() != targets.pixel_count()) {
    throw Error(ErrorCode::kShapeMismatch, "classification targets are malformed");
  }
  const double normalizer =
      static_cast<double>(std::max<std::size_t>(targets.foreground_count(), 1));

  std::vector<double> terms;
  terms.reserve(dense.logits.size());
  LossWithGradient out;
  out.gradient.assign(dense.logits.size(), 0.0);
  for (std::size_t idx = 0; idx < targets.pixel_count(); ++idx) {
    if (targets.valid[idx] == 0) continue;
    const auto logits = dense.logits_at(idx);
    for (std::size_t k = 0; k < kNumCategories; ++k) {
      const double q =
          targets.category[idx] == static_cast<int>(k) ? targets.quality[idx] : 0.0;
      terms.push_back(vfl_from_logit(logits[k], q, config));
      out.gradient[idx * kNumCategories + k] = vfl_grad(logits[k], q, config) / normalizer;
    }
  }
  out.value = pairwise_sum(terms) / normalizer;
  return out;
}

LossWithGradient regression_loss(const DenseOutput& dense, const FrameTargets& frame) {
  dense.check_shape(frame.height, frame.width);
  int max_gt = kBackground;
  for (int g : frame.gt_index) max_gt = std::max(max_gt, g);
  const std::size_t num_gts = static_cast<std::size_t>(max_gt + 1);

  std::vector<std::vector<double>> per_object(num_gts);
  for (std::size_t idx = 0; idx < frame.pixel_count(); ++idx) {
    const int g = frame.gt_index[idx];
    if (g == kBackground) continue;
    const auto r = dense.regression_at(idx);
    const auto t = frame.targets[idx].to_array();
    double l1 = 0.0;
    for (std::size_t k = 0; k < kRegressionDims; ++k) l1 += std::abs(r[k] - t[k]);
    per_object[static_cast<std::size_t>(g)].push_back(l1);
  }

  std::vector<double> object_means;
  for (const auto& terms : per_object) {
    if (terms.empty()) continue;
    object_means.push_back(pairwise_sum(terms) / static_cast<double>(terms.size()));
  }

  LossWithGradient out;
  out.gradient.assign(dense.regression.size(), 0.0);
  if (object_means.empty()) return out;
  const double num_objects = static_cast<double>(object_means.size());
  out.value = pairwise_sum(object_means) / num_objects;

  for (std::size_t idx = 0; idx < frame.pixel_count(); ++idx) {
    const int g = frame.gt_index[idx];
    if (g == kBackground) continue;
    const double scale =
        1.0 / (num_objects * static_cast<double>(per_object[static_cast<std::size_t>(g)].size()));
    const auto r = dense.regression_at(idx);
    const auto t = frame.targets[idx].to_array();
    for (std::size_t k = 0; k < kRegressionDims; ++k) {
      out.gradient[idx * kRegressionDims + k] = scale * sign(r[k] - t[k]);
    }
  }
  return out;
}

TotalLoss total_loss(const DenseOutput& dense, const ClassificationTargets& cls_targets,
                     const FrameTargets& frame, const VflConfig& config) {
  LossWithGradient cls = classification_loss(dense, cls_targets, config);
  LossWithGradient reg = regression_loss(dense, frame);
  TotalLoss out;
  out.classification = cls.value;
  out.regression = reg.value;
  out.total = cls.value + reg.value;
  out.logits_gradient = std::move(cls.gradient);
  out.regression_gradient = std::move(reg.gradient);
  return out;
}

}  // namespace rvdet
