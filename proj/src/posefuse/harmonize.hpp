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

#include "posefuse/records.hpp"
#include "posefuse/skeleton.hpp"

#include <array>
#include <cstddef>
#include <optional>

namespace posefuse {

// Per-dataset converters into the canonical 16-joint layout. 2D converters turn NaN
// coordinates into invisible (0, 0) joints; 3D converters reject NaN.
Pose2D convert_mpii(const RawRecord& record);
Pose2D convert_lsp(const RawRecord& record);
Pose2D convert_flic(const RawRecord& record);
Pose3D convert_h36m(const RawRecord& record);
Pose3D convert_mpii3d(const RawRecord& record);
Pose3D convert_op(const RawRecord& record);

Pose3D root_align(const Pose3D& pose);

/// Pinhole projection of a camera-frame pose. Joints outside the camera's image
/// bounds (when known) become invisible.
Pose2D project_pose(const Pose3D& camera_pose, const Camera& camera);

/// Least-squares scale between the root-centred 2D pose and the xy of a root-aligned
/// 3D pose, over visible non-root joints.
double solve_depth_scale(const Pose3D& root_aligned, const Pose2D& pose2d);

std::array<double, kNumJoints> scale_depth(const Pose3D& root_aligned, double scale);

struct HarmonizeStats {
  size_t nan_substituted = 0;  // joints whose NaN annotation became (0, 0)
};

HarmonizedSample harmonize_record(
    const RawRecord& record,
    const std::optional<Camera>& camera = std::nullopt,
    HarmonizeStats* stats = nullptr);

} // namespace posefuse
