// SPDX-License-Identifier: Apache-2.0
//
// Varifocal classification loss and L1 regression loss with gradients at the
// dense-output boundary. Reductions use pairwise summation in row-major
// (then category / channel) order, so results are bit-stable.
#pragma once

#include <span>
#include <vector>

#include "rvdet/dense.hpp"
#include "rvdet/supervision.hpp"
#include "rvdet/targets.hpp"

namespace rvdet {

struct VflConfig {
  double alpha = 0.75;
  double gamma = 2.0;

  void validate() const;
};

/// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kProbabilityEpsilon = 1e-7;

double sigmoid(double logit);

/// q > 0:  -q (q log c + (1 - q) log(1 - c))
/// q == 0: -alpha c^gamma log(1 - c)
double vfl(double probability, double quality, const VflConfig& config);
double vfl_from_logit(double logit, double quality, const VflConfig& config);

/// d vfl(sigmoid(logit), q) / d logit. Zero where the clamp is active.
double vfl_grad(double logit, double quality, const VflConfig& config);

/// Loss value plus its gradient w.r.t. one block of the dense output
/// (logits or regression, same layout as DenseOutput).
struct LossWithGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// (1 / max(M, 1)) * sum over valid pixels and categories of vfl, where the
/// per-category target is q on the assigned category and 0 elsewhere and M is
/// the number of foreground pixels.
LossWithGradient classification_loss(const DenseOutput& dense,
                                     const ClassificationTargets& targets,
                                     const VflConfig& config);

/// (1 / N) sum_j (1 / |P_j|) sum_{i in P_j} sum_k |r_ik - t_ik| over objects
/// with at least one foreground pixel. Zero when there are none.
LossWithGradient regression_loss(const DenseOutput& dense, const FrameTargets& frame);

struct TotalLoss {
  double classification = 0.0;
  double regression = 0.0;
  double total = 0.0;
  std::vector<double> logits_gradient;
  std::vector<double> regression_gradient;
};

TotalLoss total_loss(const DenseOutput& dense, const ClassificationTargets& cls_targets,
                     const FrameTargets& frame, const VflConfig& config);

/// Recursive pairwise sum with a fixed split, deterministic for a given input.
double pairwise_sum(std::span<const double> values);

}  // namespace rvdet
