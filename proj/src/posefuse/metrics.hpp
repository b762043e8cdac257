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

#include "posefuse/dataset.hpp"
#include "posefuse/model.hpp"
#include "posefuse/skeleton.hpp"

#include <json.hpp>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace posefuse {

/// Neumaier-compensated running sum; the result does not depend on how the terms
/// were grouped beyond the last few ulps.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept {
    return sum_ + comp_;
  }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Mean Euclidean error over visible joints. Both poses must share a frame.
double mpjpe(const Pose3D& pred, const Pose3D& gt, const Visibility& visibility);

/// Percentage of visible ground-truth joints whose prediction lies within
/// `threshold_fraction` of the neck to head-top distance. The boundary counts.
double pckh(std::span<const Pose2D> preds, std::span<const Pose2D> gts, double threshold_fraction = 0.5);

/// Head segment used by PCKh; throws Precondition when missing or zero.
double head_segment_length(const Pose2D& gt);

/// Canonical bone groups built from the default reference skeleton.
const std::vector<BoneGroup>& reference_bone_groups();

struct EvalReport {
  std::string dataset;
  double pckh_at_05 = 0.0;
  double mpjpe_mm = 0.0;  // NaN when no sample carries 3D labels
  std::array<double, kNumJoints> per_joint_mpjpe{};
  std::array<double, kNumJoints> per_joint_pckh{};
  size_t sample_count = 0;   // samples evaluated
  size_t mpjpe_samples = 0;  // of which carried 3D labels
  size_t skipped = 0;        // degenerate samples left out
  double bone_ratio_variance = 0.0;  // mean within-group ratio variance of predictions

  nlohmann::json to_json() const;
  /// Plain-text table; with `per_joint` one row per joint follows the summary.
  std::string to_table(bool per_joint) const;
};

/// Runs the network on every sample. MPJPE converts predictions back to mm with
/// each sample's depth scale: ((x - x_root) / s, (y - y_root) / s, z / s).
EvalReport evaluate(const Network& network, const Dataset& dataset, Decode decode);

} // namespace posefuse
