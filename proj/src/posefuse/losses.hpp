// Copyright 2026 The posefuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "posefuse/heatmap.hpp"
#include "posefuse/records.hpp"
#include "posefuse/skeleton.hpp"

#include <array>
#include <span>

namespace posefuse {

/// Image-scaled depth per joint.
using DepthPrediction = std::array<double, kNumJoints>;

struct LossWeights {
  double lambda_reg = 0.0;
  double lambda_geo = 0.0;
  double beta = 1.0;  // Smooth-L1 knee

  void validate() const;
};

/// Sum of squared cell differences over the visible planes. `visibility` has one
/// entry per plane. When `grad` is given it receives d(loss)/d(pred).
double loss_2d_heatmap(
    const Heatmap& pred,
    const Heatmap& target,
    std::span<const bool> visibility,
    Heatmap* grad = nullptr);

/// Smooth-L1 averaged over visible joints; zero when no joint is visible.
double loss_depth_smooth_l1(
    const DepthPrediction& pred,
    const DepthPrediction& target,
    const Visibility& visibility,
    double beta,
    DepthPrediction* grad = nullptr);

/// Within-group variance of predicted/canonical bone-length ratios, summed over groups.
/// Bones touching an invisible joint are left out; a group with fewer than two usable
/// bones contributes nothing. Works in any frame since only ratios matter.
double loss_geometric(
    const Pose3D& pred,
    std::span<const BoneGroup> groups,
    std::array<Eigen::Vector3d, kNumJoints>* grad = nullptr);

struct DepthTerms {
  double dep_3d = 0.0;  // Smooth-L1 term, used for 3D samples
  double geo = 0.0;     // geometric term, used for 2D samples
};

/// lambda_reg * dep_3d for 3D samples, lambda_geo * geo for 2D samples.
double loss_depth_combined(SampleSource source, const DepthTerms& terms, const LossWeights& weights);

/// l2d + ldep; a non-finite input raises a Divergence error.
double loss_total(double l2d, double ldep);

} // namespace posefuse
