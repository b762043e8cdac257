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

#include "posefuse/skeleton.hpp"

#include "posefuse/error.hpp"

#include <fmt/ranges.h>
#include <json.hpp>

#include <fstream>
#include <numeric>

namespace posefuse {

namespace {

CanonicalSkeleton make_canonical() {
  CanonicalSkeleton s;
  s.joint_names = {
      "r_ankle",
      "r_knee",
      "r_hip",
      "l_hip",
      "l_knee",
      "l_ankle",
      "pelvis",
      "thorax",
      "neck",
      "head_top",
      "r_wrist",
      "r_elbow",
      "r_shoulder",
      "l_shoulder",
      "l_elbow",
      "l_wrist"};
  // Parents precede children, so forward kinematics can walk this list in order.
  using J = Joint;
  const std::array<std::pair<const char*, Bone>, kNumBones> edges = {{
      {"r_hip", {index_of(J::Pelvis), index_of(J::RHip)}},
      {"r_thigh", {index_of(J::RHip), index_of(J::RKnee)}},
      {"r_shank", {index_of(J::RKnee), index_of(J::RAnkle)}},
      {"l_hip", {index_of(J::Pelvis), index_of(J::LHip)}},
      {"l_thigh", {index_of(J::LHip), index_of(J::LKnee)}},
      {"l_shank", {index_of(J::LKnee), index_of(J::LAnkle)}},
      {"spine", {index_of(J::Pelvis), index_of(J::Thorax)}},
      {"neck", {index_of(J::Thorax), index_of(J::Neck)}},
      {"head", {index_of(J::Neck), index_of(J::HeadTop)}},
      {"r_clavicle", {index_of(J::Thorax), index_of(J::RShoulder)}},
      {"r_upper_arm", {index_of(J::RShoulder), index_of(J::RElbow)}},
      {"r_forearm", {index_of(J::RElbow), index_of(J::RWrist)}},
      {"l_clavicle", {index_of(J::Thorax), index_of(J::LShoulder)}},
      {"l_upper_arm", {index_of(J::LShoulder), index_of(J::LElbow)}},
      {"l_forearm", {index_of(J::LElbow), index_of(J::LWrist)}},
  }};
  for (int i = 0; i < kNumBones; ++i) {
    s.bone_names[i] = edges[i].first;
    s.bones[i] = edges[i].second;
  }
  s.root_index = kRootJoint;
  return s;
}

} // namespace

std::string_view frame_name(Frame frame) {
  switch (frame) {
    case Frame::CameraMm:
      return "camera_mm";
    case Frame::RootAlignedMm:
      return "root_aligned_mm";
    case Frame::ImageScaled:
      return "image_scaled";
  }
  return "unknown";
}

int CanonicalSkeleton::bone_index(std::string_view name) const {
  for (int i = 0; i < kNumBones; ++i) {
    if (bone_names[i] == name) {
      return i;
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown bone '{}'; valid bones: {}", name, fmt::join(bone_names, ", "));
}

int CanonicalSkeleton::bone_index(Bone bone) const {
  for (int i = 0; i < kNumBones; ++i) {
    if (bones[i] == bone) {
      return i;
    }
  }
  fail(ErrorKind::InvalidArgument, "({}, {}) is not a canonical bone edge", bone.parent, bone.child);
}

const CanonicalSkeleton& canonical_skeleton() {
  static const CanonicalSkeleton skeleton = make_canonical();
  return skeleton;
}

void validate_skeleton(const CanonicalSkeleton& skeleton) {
  PF_THROW_IF(
      skeleton.root_index != kRootJoint,
      ErrorKind::InvalidArgument,
      "root must be the pelvis ({}), got {}",
      kRootJoint,
      skeleton.root_index);
  std::array<int, kNumJoints> parent{};
  parent.fill(-1);
  for (const Bone& b : skeleton.bones) {
    PF_THROW_IF(
        b.parent < 0 || b.parent >= kNumJoints || b.child < 0 || b.child >= kNumJoints,
        ErrorKind::InvalidArgument,
        "bone ({}, {}) references an invalid joint",
        b.parent,
        b.child);
    PF_THROW_IF(b.child == skeleton.root_index, ErrorKind::InvalidArgument, "root joint has a parent");
    PF_THROW_IF(parent[b.child] != -1, ErrorKind::InvalidArgument, "joint {} has two parents", b.child);
    parent[b.child] = b.parent;
  }
  // 15 edges, one parent per non-root joint; the graph is a tree iff every joint reaches the root.
  for (int j = 0; j < kNumJoints; ++j) {
    int cur = j;
    int steps = 0;
    while (cur != skeleton.root_index) {
      PF_THROW_IF(parent[cur] == -1, ErrorKind::InvalidArgument, "joint {} is disconnected", j);
      cur = parent[cur];
      PF_THROW_IF(++steps > kNumJoints, ErrorKind::InvalidArgument, "cycle through joint {}", j);
    }
  }
}

int canonical_joint_index(std::string_view name) {
  const auto& names = canonical_skeleton().joint_names;
  for (int i = 0; i < kNumJoints; ++i) {
    if (names[i] == name) {
      return i;
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown joint '{}'; valid joints: {}", name, fmt::join(names, ", "));
}

double bone_length(const Pose3D& pose, Bone bone) {
  PF_THROW_IF(
      bone.parent < 0 || bone.parent >= kNumJoints || bone.child < 0 || bone.child >= kNumJoints,
      ErrorKind::InvalidArgument,
      "invalid bone edge ({}, {})",
      bone.parent,
      bone.child);
  PF_THROW_IF(
      pose.frame == Frame::ImageScaled,
      ErrorKind::Precondition,
      "bone_length expects a metric pose, got frame {}",
      frame_name(pose.frame));
  return (pose.coords[bone.child] - pose.coords[bone.parent]).norm();
}

BoneLengths default_reference_lengths() {
  // r_hip, r_thigh, r_shank, l_hip, l_thigh, l_shank, spine, neck, head,
  // r_clavicle, r_upper_arm, r_forearm, l_clavicle, l_upper_arm, l_forearm
  return {130.0, 440.0, 420.0, 130.0, 440.0, 420.0, 470.0, 110.0, 220.0, 170.0, 280.0, 250.0, 170.0, 280.0, 250.0};
}

BoneLengths load_reference_skeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  PF_THROW_IF(!in, ErrorKind::Io, "cannot open reference skeleton '{}'", path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, "reference skeleton '{}': {}", path.string(), e.what());
  }
  PF_THROW_IF(
      !doc.contains("bones") || !doc["bones"].is_object(),
      ErrorKind::Parse,
      "reference skeleton '{}' has no 'bones' object",
      path.string());
  if (doc.contains("units")) {
    PF_THROW_IF(doc["units"] != "mm", ErrorKind::Parse, "reference skeleton units must be mm");
  }
  BoneLengths lengths = default_reference_lengths();
  const auto& skel = canonical_skeleton();
  for (const auto& [name, value] : doc["bones"].items()) {
    PF_THROW_IF(!value.is_number(), ErrorKind::Parse, "bone '{}' length is not a number", name);
    const double len = value.get<double>();
    PF_THROW_IF(!(len > 0.0), ErrorKind::Parse, "bone '{}' length must be positive, got {}", name, len);
    lengths[skel.bone_index(name)] = len;
  }
  return lengths;
}

void save_reference_skeleton(const BoneLengths& lengths, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["format"] = "posefuse-reference-skeleton";
  doc["version"] = 1;
  doc["units"] = "mm";
  const auto& skel = canonical_skeleton();
  for (int i = 0; i < kNumBones; ++i) {
    doc["bones"][skel.bone_names[i]] = lengths[i];
  }
  std::ofstream out(path);
  PF_THROW_IF(!out, ErrorKind::Io, "cannot write '{}'", path.string());
  out << doc.dump(2) << '\n';
}

const std::array<Eigen::Vector3d, kNumBones>& rest_directions() {
  static const std::array<Eigen::Vector3d, kNumBones> dirs = [] {
    std::array<Eigen::Vector3d, kNumBones> d;
    // Subject faces the camera: their right side appears at negative x.
    d[0] = {-1.0, 0.0, 0.0};                              // r_hip
    d[1] = Eigen::Vector3d(-0.05, 1.0, 0.0).normalized(); // r_thigh
    d[2] = {0.0, 1.0, 0.0};                               // r_shank
    d[3] = {1.0, 0.0, 0.0};
    d[4] = Eigen::Vector3d(0.05, 1.0, 0.0).normalized();
    d[5] = {0.0, 1.0, 0.0};
    d[6] = {0.0, -1.0, 0.0};  // spine
    d[7] = {0.0, -1.0, 0.0};  // neck
    d[8] = {0.0, -1.0, 0.0};  // head
    d[9] = {-1.0, 0.0, 0.0};  // r_clavicle
    d[10] = Eigen::Vector3d(-0.5, 0.866, 0.0).normalized();
    d[11] = Eigen::Vector3d(-0.34, 0.94, 0.0).normalized();
    d[12] = {1.0, 0.0, 0.0};
    d[13] = Eigen::Vector3d(0.5, 0.866, 0.0).normalized();
    d[14] = Eigen::Vector3d(0.34, 0.94, 0.0).normalized();
    return d;
  }();
  return dirs;
}

Pose3D reference_pose(const BoneLengths& lengths) {
  const auto& skel = canonical_skeleton();
  const auto& dirs = rest_directions();
  Pose3D pose;
  pose.frame = Frame::RootAlignedMm;
  pose.visible = all_visible();
  pose.coords[skel.root_index].setZero();
  for (int i = 0; i < kNumBones; ++i) {
    const Bone b = skel.bones[i];
    pose.coords[b.child] = pose.coords[b.parent] + lengths[i] * dirs[i];
  }
  return pose;
}

void validate_bone_group(const BoneGroup& group) {
  PF_THROW_IF(
      group.bones.size() < 2,
      ErrorKind::InvalidArgument,
      "bone group '{}' needs at least two bones",
      group.name);
  PF_THROW_IF(
      group.bones.size() != group.canonical_lengths.size(),
      ErrorKind::InvalidArgument,
      "bone group '{}' has {} bones but {} lengths",
      group.name,
      group.bones.size(),
      group.canonical_lengths.size());
  for (size_t i = 0; i < group.canonical_lengths.size(); ++i) {
    PF_THROW_IF(
        !(group.canonical_lengths[i] > 0.0),
        ErrorKind::InvalidArgument,
        "bone group '{}': canonical length {} of bone {} is not positive",
        group.name,
        group.canonical_lengths[i],
        i);
  }
}

std::vector<BoneGroup> default_bone_groups(const CanonicalSkeleton& skeleton, const Pose3D& canonical_pose) {
  for (int j = 0; j < kNumJoints; ++j) {
    PF_THROW_IF(
        !canonical_pose.visible[j],
        ErrorKind::Precondition,
        "reference pose must have every joint visible ({} is not)",
        skeleton.joint_names[j]);
  }
  const std::array<std::pair<const char*, std::array<const char*, 4>>, 4> layout = {{
      {"arms", {"r_upper_arm", "r_forearm", "l_upper_arm", "l_forearm"}},
      {"legs", {"r_thigh", "r_shank", "l_thigh", "l_shank"}},
      {"shoulders", {"r_clavicle", "l_clavicle", nullptr, nullptr}},
      {"hips", {"r_hip", "l_hip", nullptr, nullptr}},
  }};
  std::vector<BoneGroup> groups;
  for (const auto& [name, members] : layout) {
    BoneGroup g;
    g.name = name;
    for (const char* bone_name : members) {
      if (bone_name == nullptr) {
        continue;
      }
      const Bone b = skeleton.bones[skeleton.bone_index(bone_name)];
      const double len = bone_length(canonical_pose, b);
      PF_THROW_IF(
          !(len > 0.0),
          ErrorKind::Precondition,
          "reference pose has a zero-length {} inside group '{}'",
          bone_name,
          name);
      g.bones.push_back(b);
      g.canonical_lengths.push_back(len);
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

} // namespace posefuse
