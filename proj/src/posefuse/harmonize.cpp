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

#include "posefuse/harmonize.hpp"

#include "posefuse/error.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace posefuse {

namespace {

using J = Joint;

// Name-indexed view over a record's joints with count and presence checks.
class SourceJoints {
 public:
  SourceJoints(const RawRecord& record, std::span<const std::string_view> required, size_t expected_count)
      : record_(record) {
    PF_THROW_IF(
        record.joints.size() != expected_count,
        ErrorKind::Precondition,
        "{} record must have {} joints, got {}",
        dataset_name(record.dataset),
        expected_count,
        record.joints.size());
    for (size_t i = 0; i < record.joints.size(); ++i) {
      const bool inserted = index_.emplace(record.joints[i].name, i).second;
      PF_THROW_IF(
          !inserted,
          ErrorKind::Precondition,
          "{} record lists joint '{}' twice",
          dataset_name(record.dataset),
          record.joints[i].name);
    }
    for (std::string_view name : required) {
      PF_THROW_IF(
          !has(name),
          ErrorKind::Precondition,
          "{} record is missing required joint '{}'",
          dataset_name(record.dataset),
          name);
    }
  }

  bool has(std::string_view name) const {
    return index_.count(std::string(name)) != 0;
  }

  const NamedJoint& get(std::string_view name) const {
    auto it = index_.find(std::string(name));
    PF_THROW_IF(
        it == index_.end(),
        ErrorKind::Precondition,
        "{} record is missing required joint '{}'",
        dataset_name(record_.dataset),
        name);
    return record_.joints[it->second];
  }

  bool finite2(std::string_view name) const {
    const auto& j = get(name);
    return std::isfinite(j.x) && std::isfinite(j.y);
  }

  Eigen::Vector2d xy(std::string_view name) const {
    const auto& j = get(name);
    return {j.x, j.y};
  }

  Eigen::Vector3d xyz(std::string_view name) const {
    const auto& j = get(name);
    PF_THROW_IF(
        !j.z.has_value(),
        ErrorKind::Precondition,
        "{} joint '{}' has no z coordinate",
        dataset_name(record_.dataset),
        name);
    const Eigen::Vector3d p(j.x, j.y, *j.z);
    PF_THROW_IF(
        !p.allFinite(),
        ErrorKind::Precondition,
        "{} joint '{}' is not finite",
        dataset_name(record_.dataset),
        name);
    return p;
  }

 private:
  const RawRecord& record_;
  std::unordered_map<std::string, size_t> index_;
};

void require_dataset(const RawRecord& record, DatasetId expected) {
  PF_THROW_IF(
      record.dataset != expected,
      ErrorKind::InvalidArgument,
      "expected a {} record, got {}",
      dataset_name(expected),
      dataset_name(record.dataset));
}

// Builds a 2D pose from (canonical joint, source joint) pairs; NaN -> invisible (0, 0).
struct Pose2DBuilder {
  const SourceJoints& src;
  Pose2D pose;
  size_t nan_count = 0;

  void copy(J joint, std::string_view source_name) {
    const int j = index_of(joint);
    if (src.finite2(source_name)) {
      pose.coords[j] = src.xy(source_name);
      pose.visible[j] = true;
    } else {
      pose.hide(j);
      ++nan_count;
    }
  }

  void midpoint(J joint, std::string_view a, std::string_view b) {
    const int j = index_of(joint);
    if (src.finite2(a) && src.finite2(b)) {
      pose.coords[j] = 0.5 * (src.xy(a) + src.xy(b));
      pose.visible[j] = true;
    } else {
      pose.hide(j);
      ++nan_count;
    }
  }
};

Pose2D finish(Pose2DBuilder& b, size_t* nan_count) {
  if (nan_count) {
    *nan_count += b.nan_count;
  }
  return b.pose;
}

Pose2D mpii_impl(const RawRecord& record, size_t* nan_count) {
  require_dataset(record, DatasetId::Mpii);
  const auto names = native_joint_names(DatasetId::Mpii);
  SourceJoints src(record, names, names.size());
  Pose2DBuilder b{src, {}, 0};
  for (int j = 0; j < kNumJoints; ++j) {
    b.copy(static_cast<J>(j), names[j]);
  }
  return finish(b, nan_count);
}

Pose2D lsp_impl(const RawRecord& record, size_t* nan_count) {
  require_dataset(record, DatasetId::Lsp);
  const auto names = native_joint_names(DatasetId::Lsp);
  SourceJoints src(record, names, names.size());
  Pose2DBuilder b{src, {}, 0};
  b.copy(J::RAnkle, "r_ankle");
  b.copy(J::RKnee, "r_knee");
  b.copy(J::RHip, "r_hip");
  b.copy(J::LHip, "l_hip");
  b.copy(J::LKnee, "l_knee");
  b.copy(J::LAnkle, "l_ankle");
  b.midpoint(J::Pelvis, "l_hip", "r_hip");
  b.midpoint(J::Thorax, "l_shoulder", "r_shoulder");
  b.copy(J::Neck, "neck");
  b.copy(J::HeadTop, "head_top");
  b.copy(J::RWrist, "r_wrist");
  b.copy(J::RElbow, "r_elbow");
  b.copy(J::RShoulder, "r_shoulder");
  b.copy(J::LShoulder, "l_shoulder");
  b.copy(J::LElbow, "l_elbow");
  b.copy(J::LWrist, "l_wrist");
  return finish(b, nan_count);
}

Pose2D flic_impl(const RawRecord& record, size_t* nan_count) {
  require_dataset(record, DatasetId::Flic);
  const auto names = native_joint_names(DatasetId::Flic);
  SourceJoints src(record, names, names.size());
  Pose2DBuilder b{src, {}, 0};
  b.copy(J::RAnkle, "rank");
  b.copy(J::RKnee, "rkne");
  b.copy(J::RHip, "rhip");
  b.copy(J::LHip, "lhip");
  b.copy(J::LKnee, "lkne");
  b.copy(J::LAnkle, "lank");
  b.copy(J::Pelvis, "mhip");
  b.copy(J::Thorax, "mtorso");
  b.copy(J::Neck, "msho");
  b.copy(J::HeadTop, "nose");
  b.copy(J::RWrist, "rwri");
  b.copy(J::RElbow, "relb");
  b.copy(J::RShoulder, "rsho");
  b.copy(J::LShoulder, "lsho");
  b.copy(J::LElbow, "lelb");
  b.copy(J::LWrist, "lwri");
  return finish(b, nan_count);
}

} // namespace

Pose2D convert_mpii(const RawRecord& record) {
  return mpii_impl(record, nullptr);
}

Pose2D convert_lsp(const RawRecord& record) {
  return lsp_impl(record, nullptr);
}

Pose2D convert_flic(const RawRecord& record) {
  return flic_impl(record, nullptr);
}

Pose3D convert_h36m(const RawRecord& record) {
  require_dataset(record, DatasetId::H36m);
  const auto names = native_joint_names(DatasetId::H36m);
  SourceJoints src(record, names, names.size());
  Pose3D p;
  p.frame = Frame::CameraMm;
  p.visible = all_visible();
  auto set = [&](J j, std::string_view name) { p.coords[index_of(j)] = src.xyz(name); };
  set(J::RAnkle, "r_foot");
  set(J::RKnee, "r_knee");
  set(J::RHip, "r_hip");
  set(J::LHip, "l_hip");
  set(J::LKnee, "l_knee");
  set(J::LAnkle, "l_foot");
  set(J::Pelvis, "hip");
  set(J::Thorax, "spine");  // H36M has no thorax in the MPII sense
  set(J::Neck, "neck_nose");
  set(J::HeadTop, "head");
  set(J::RWrist, "r_wrist");
  set(J::RElbow, "r_elbow");
  set(J::RShoulder, "r_shoulder");
  set(J::LShoulder, "l_shoulder");
  set(J::LElbow, "l_elbow");
  set(J::LWrist, "l_wrist");
  return p;
}

Pose3D convert_mpii3d(const RawRecord& record) {
  require_dataset(record, DatasetId::Mpii3d);
  const size_t n = record.joints.size();
  PF_THROW_IF(n != 28 && n != 17, ErrorKind::Precondition, "mpii3d record must have 28 or 17 joints, got {}", n);
  const auto layout = native_joint_names(DatasetId::Mpii3d, n == 17);
  std::vector<std::string_view> required;
  for (auto name : layout) {
    if (!name.starts_with("spine")) {
      required.push_back(name);
    }
  }
  SourceJoints src(record, required, n);

  Pose3D p;
  p.frame = Frame::CameraMm;
  p.visible = all_visible();
  auto set = [&](J j, std::string_view name) { p.coords[index_of(j)] = src.xyz(name); };
  set(J::RAnkle, "right_ankle");
  set(J::RKnee, "right_knee");
  set(J::RHip, "right_hip");
  set(J::LHip, "left_hip");
  set(J::LKnee, "left_knee");
  set(J::LAnkle, "left_ankle");
  set(J::Pelvis, "pelvis");
  set(J::Neck, "neck");
  set(J::HeadTop, "head_top");
  set(J::RWrist, "right_wrist");
  set(J::RElbow, "right_elbow");
  set(J::RShoulder, "right_shoulder");
  set(J::LShoulder, "left_shoulder");
  set(J::LElbow, "left_elbow");
  set(J::LWrist, "left_wrist");

  // Thorax: the spine joint closest to the shoulder midpoint; ties keep record order.
  const Eigen::Vector3d mid = 0.5 * (src.xyz("left_shoulder") + src.xyz("right_shoulder"));
  const NamedJoint* best = nullptr;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const auto& j : record.joints) {
    if (!j.name.starts_with("spine")) {
      continue;
    }
    const double d2 = (src.xyz(j.name) - mid).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = &j;
    }
  }
  PF_THROW_IF(best == nullptr, ErrorKind::Precondition, "mpii3d record has no spine joint");
  p.coords[index_of(J::Thorax)] = src.xyz(best->name);
  return p;
}

Pose3D convert_op(const RawRecord& record) {
  require_dataset(record, DatasetId::Op);
  const auto names = native_joint_names(DatasetId::Op);
  SourceJoints src(record, names, names.size());
  Pose3D p;
  p.frame = Frame::CameraMm;
  p.visible = all_visible();
  auto set = [&](J j, std::string_view name) { p.coords[index_of(j)] = src.xyz(name); };
  set(J::RAnkle, "r_ankle");
  set(J::RKnee, "r_knee");
  set(J::RHip, "r_hip");
  set(J::LHip, "l_hip");
  set(J::LKnee, "l_knee");
  set(J::LAnkle, "l_ankle");
  set(J::Pelvis, "pelvis");
  set(J::Neck, "neck");
  set(J::HeadTop, "neck");  // no head top in OP
  set(J::RWrist, "r_wrist");
  set(J::RElbow, "r_elbow");
  set(J::RShoulder, "r_shoulder");
  set(J::LShoulder, "l_shoulder");
  set(J::LElbow, "l_elbow");
  set(J::LWrist, "l_wrist");
  p.coords[index_of(J::Thorax)] = 0.5 * (src.xyz("l_shoulder") + src.xyz("r_shoulder"));
  return p;
}

Pose3D root_align(const Pose3D& pose) {
  PF_THROW_IF(
      pose.frame == Frame::ImageScaled,
      ErrorKind::Precondition,
      "root_align expects a metric pose, got {}",
      frame_name(pose.frame));
  Pose3D out = pose;
  const Eigen::Vector3d root = pose.coords[kRootJoint];
  for (auto& c : out.coords) {
    c -= root;
  }
  out.coords[kRootJoint].setZero();
  out.frame = Frame::RootAlignedMm;
  return out;
}

Pose2D project_pose(const Pose3D& pose, const Camera& camera) {
  PF_THROW_IF(
      pose.frame != Frame::CameraMm,
      ErrorKind::Precondition,
      "projection expects a camera-frame pose, got {}",
      frame_name(pose.frame));
  Pose2D out;
  for (int j = 0; j < kNumJoints; ++j) {
    const Eigen::Vector3d& p = pose.coords[j];
    PF_THROW_IF(!(p.z() > 0.0), ErrorKind::Precondition, "joint {} has nonpositive depth {}", j, p.z());
    const Eigen::Vector2d uv(camera.fx * p.x() / p.z() + camera.cx, camera.fy * p.y() / p.z() + camera.cy);
    bool inside = pose.visible[j];
    if (camera.width && (uv.x() < 0.0 || uv.x() >= *camera.width)) {
      inside = false;
    }
    if (camera.height && (uv.y() < 0.0 || uv.y() >= *camera.height)) {
      inside = false;
    }
    if (inside) {
      out.coords[j] = uv;
      out.visible[j] = true;
    } else {
      out.hide(j);
    }
  }
  return out;
}

double solve_depth_scale(const Pose3D& pose3d, const Pose2D& pose2d) {
  PF_THROW_IF(
      pose3d.frame != Frame::RootAlignedMm,
      ErrorKind::Precondition,
      "depth scale needs a root-aligned pose, got {}",
      frame_name(pose3d.frame));
  PF_THROW_IF(!pose2d.visible[kRootJoint], ErrorKind::Precondition, "depth scale needs a visible 2D root");
  const Eigen::Vector2d root2d = pose2d.coords[kRootJoint];
  double num = 0.0;
  double den = 0.0;
  int used = 0;
  for (int j = 0; j < kNumJoints; ++j) {
    if (j == kRootJoint || !pose2d.visible[j] || !pose3d.visible[j]) {
      continue;
    }
    const Eigen::Vector2d xy = pose3d.coords[j].head<2>();
    num += (pose2d.coords[j] - root2d).dot(xy);
    den += xy.squaredNorm();
    ++used;
  }
  PF_THROW_IF(used < 2, ErrorKind::Precondition, "depth scale needs at least 2 visible non-root joints, got {}", used);
  PF_THROW_IF(!(den > 0.0), ErrorKind::Precondition, "degenerate depth scale: every 3D joint projects onto the root");
  return num / den;
}

std::array<double, kNumJoints> scale_depth(const Pose3D& pose3d, double scale) {
  PF_THROW_IF(
      !std::isfinite(scale) || !(scale > 0.0),
      ErrorKind::Precondition,
      "depth scale must be finite and positive, got {}",
      scale);
  PF_THROW_IF(
      pose3d.frame != Frame::RootAlignedMm,
      ErrorKind::Precondition,
      "scale_depth needs a root-aligned pose");
  std::array<double, kNumJoints> depth{};
  for (int j = 0; j < kNumJoints; ++j) {
    depth[j] = pose3d.coords[j].z() * scale;
  }
  depth[kRootJoint] = 0.0;
  return depth;
}

HarmonizedSample harmonize_record(const RawRecord& record, const std::optional<Camera>& camera, HarmonizeStats* stats) {
  HarmonizedSample s;
  s.dataset = record.dataset;
  s.split = record.split;
  s.image = record.image;

  if (!is_3d_dataset(record.dataset)) {
    size_t* nan_count = stats ? &stats->nan_substituted : nullptr;
    switch (record.dataset) {
      case DatasetId::Mpii:
        s.pose2d = mpii_impl(record, nan_count);
        break;
      case DatasetId::Lsp:
        s.pose2d = lsp_impl(record, nan_count);
        break;
      default:
        s.pose2d = flic_impl(record, nan_count);
        break;
    }
    s.source = SampleSource::Set2D;
    return s;
  }

  Pose3D cam_pose;
  switch (record.dataset) {
    case DatasetId::H36m:
      cam_pose = convert_h36m(record);
      break;
    case DatasetId::Mpii3d:
      cam_pose = convert_mpii3d(record);
      break;
    default:
      cam_pose = convert_op(record);
      break;
  }
  const std::optional<Camera> cam = camera ? camera : record.camera;
  PF_THROW_IF(
      !cam,
      ErrorKind::Precondition,
      "{} record '{}' needs camera intrinsics to derive its 2D pose",
      dataset_name(record.dataset),
      record.image);

  s.source = SampleSource::Set3D;
  s.pose2d = project_pose(cam_pose, *cam);
  Pose3D aligned = root_align(cam_pose);
  aligned.visible = s.pose2d.visible;
  s.pose3d = aligned;

  double scale = 0.0;
  try {
    scale = solve_depth_scale(aligned, s.pose2d);
  } catch (const Error&) {
    s.excluded = true;
  }
  if (!s.excluded && !(scale > 0.0)) {
    s.negative_scale = true;
    s.excluded = true;
  }
  if (s.excluded) {
    s.scale = 0.0;
    s.depth = std::array<double, kNumJoints>{};
  } else {
    s.scale = scale;
    s.depth = scale_depth(aligned, scale);
  }
  return s;
}

} // namespace posefuse
