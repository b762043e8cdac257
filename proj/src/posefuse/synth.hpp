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

#include "posefuse/image.hpp"
#include "posefuse/records.hpp"
#include "posefuse/skeleton.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <variant>

namespace posefuse {

struct SynthCamera {
  double fx = 260.0;
  double fy = 260.0;
  double cx = 32.0;
  double cy = 32.0;
  double depth_offset_mm = 8000.0;  // pelvis distance along the optical axis

  Camera intrinsics(int image_size) const;
};

struct SynthParams {
  uint64_t seed = 0;
  int n_samples = 100;
  BoneLengths bone_lengths = default_reference_lengths();
  double pose_jitter = 0.35;       // radians, std-dev of per-bone rotations
  double yaw_range = 1.05;         // radians, uniform global yaw in [-range, range]
  double root_offset_mm = 150.0;   // uniform lateral shift of the pelvis
  SynthCamera camera;
  int image_size = 64;
  double flic_nan_probability = 0.1;

  void validate() const;
};

using Rng = std::mt19937_64;

/// Camera-frame pose (x right, y down, z forward) with exact profile bone lengths.
/// The torso is rigid, so pelvis and thorax are exact midpoints of hips and shoulders.
Pose3D generate_pose3d(const SynthParams& params, Rng& rng);

/// Pinhole projection; joints that land outside the image become invisible.
/// Throws Precondition when any joint has nonpositive depth.
Pose2D project_to_2d(const Pose3D& camera_pose, const SynthCamera& camera, int image_size);

/// Sets pelvis and thorax to the exact 2D midpoints of hips and shoulders, so the
/// pose survives 2D formats that store only the endpoints.
Pose2D snap_torso_midpoints(const Pose2D& pose);

struct EmitOptions {
  double flic_nan_probability = 0.1;
  std::optional<Camera> camera;  // attached to 3D records
  Split split = Split::Train;
  std::string image;
};

/// Inverse of the harmonize converters. 2D targets need a Pose2D, 3D targets a
/// camera-frame Pose3D; joints without a native counterpart are synthesised.
RawRecord emit_source_format(
    const std::variant<Pose2D, Pose3D>& pose,
    DatasetId target,
    Rng& rng,
    const EmitOptions& options = {});

/// Joint identity colour: red and green levels on a 4 x 4 grid.
std::array<uint8_t, 2> joint_color_code(int joint);

/// Blue level encoding root-relative camera depth in mm.
uint8_t depth_color_code(double depth_mm);

/// Deterministic raster: noise background, grey anti-aliased limbs, colour-coded
/// joint disks. The blue channel of each disk carries depth when given.
Image render_pose_image(const Pose2D& pose, int image_size);
Image render_pose_image(
    const Pose2D& pose,
    int image_size,
    const std::optional<std::array<double, kNumJoints>>& depth_mm);

struct SynthDatasetSummary {
  size_t records = 0;
  size_t samples = 0;
  size_t excluded = 0;
};

/// Writes `records.jsonl` (native format) plus one PPM per record under `images/`.
/// With `harmonize` it also writes `samples.jsonl` ready for training.
SynthDatasetSummary generate_dataset(
    const SynthParams& params,
    DatasetId target,
    Split split,
    const std::filesystem::path& out_dir,
    bool harmonize);

} // namespace posefuse
