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

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace posefuse {

inline constexpr int kNumJoints = 16;
inline constexpr int kNumBones = 15;

// MPII ordering. Every dataset is converted into this layout.
enum class Joint : int {
  RAnkle = 0,
  RKnee = 1,
  RHip = 2,
  LHip = 3,
  LKnee = 4,
  LAnkle = 5,
  Pelvis = 6,
  Thorax = 7,
  Neck = 8,
  HeadTop = 9,
  RWrist = 10,
  RElbow = 11,
  RShoulder = 12,
  LShoulder = 13,
  LElbow = 14,
  LWrist = 15,
};

constexpr int index_of(Joint j) noexcept {
  return static_cast<int>(j);
}

inline constexpr int kRootJoint = index_of(Joint::Pelvis);

struct Bone {
  int parent = 0;
  int child = 0;

  friend bool operator==(const Bone&, const Bone&) = default;
};

using Visibility = std::array<bool, kNumJoints>;

constexpr Visibility all_visible() noexcept {
  Visibility v{};
  for (auto& b : v) {
    b = true;
  }
  return v;
}

struct Pose2D {
  std::array<Eigen::Vector2d, kNumJoints> coords{};
  Visibility visible{};

  Pose2D() {
    for (auto& c : coords) {
      c.setZero();
    }
  }

  /// Marks a joint invisible and zeroes its coordinate.
  void hide(int joint) {
    visible[joint] = false;
    coords[joint].setZero();
  }
};

enum class Frame { CameraMm, RootAlignedMm, ImageScaled };

std::string_view frame_name(Frame frame);

struct Pose3D {
  std::array<Eigen::Vector3d, kNumJoints> coords{};
  Frame frame = Frame::CameraMm;
  Visibility visible = all_visible();

  Pose3D() {
    for (auto& c : coords) {
      c.setZero();
    }
  }
};

struct CanonicalSkeleton {
  std::array<std::string, kNumJoints> joint_names;
  std::array<std::string, kNumBones> bone_names;
  std::array<Bone, kNumBones> bones;
  int root_index = kRootJoint;

  /// Index of a named bone edge; throws InvalidArgument for unknown names.
  int bone_index(std::string_view name) const;
  int bone_index(Bone bone) const;
};

const CanonicalSkeleton& canonical_skeleton();

/// Throws InvalidArgument if the skeleton is not a 16-joint tree rooted at the pelvis.
void validate_skeleton(const CanonicalSkeleton& skeleton);

/// Index of a canonical joint name ("pelvis" -> 6). The error message lists the valid names.
int canonical_joint_index(std::string_view name);

double bone_length(const Pose3D& pose, Bone bone);

/// Canonical lengths in mm, indexed like CanonicalSkeleton::bones.
using BoneLengths = std::array<double, kNumBones>;

BoneLengths default_reference_lengths();

/// Reads a reference-skeleton document (see docs/formats.md). Bones missing from the
/// file keep their default length.
BoneLengths load_reference_skeleton(const std::filesystem::path& path);
void save_reference_skeleton(const BoneLengths& lengths, const std::filesystem::path& path);

/// Unit direction of each bone in the rest pose (camera axes: x right, y down, z away
/// from the viewer; the subject faces the camera).
const std::array<Eigen::Vector3d, kNumBones>& rest_directions();

/// Rest pose built from the given lengths, root at the origin, all joints visible.
Pose3D reference_pose(const BoneLengths& lengths);

struct BoneGroup {
  std::string name;
  std::vector<Bone> bones;
  std::vector<double> canonical_lengths;  // parallel to bones
};

/// Arms, legs, shoulders and hips, with canonical lengths measured on `canonical_pose`.
std::vector<BoneGroup> default_bone_groups(
    const CanonicalSkeleton& skeleton,
    const Pose3D& canonical_pose);

void validate_bone_group(const BoneGroup& group);

} // namespace posefuse
