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

#include "posefuse/synth.hpp"

#include "posefuse/error.hpp"
#include "posefuse/harmonize.hpp"
#include "posefuse/hash.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace posefuse {

namespace {

using J = Joint;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bones whose orientation is randomised; the torso stays rigid.
enum class Articulation { Rigid, Limb, Head };

Articulation articulation(int bone) {
  switch (bone) {
    case 1:  // r_thigh
    case 2:  // r_shank
    case 4:
    case 5:
    case 10:  // r_upper_arm
    case 11:  // r_forearm
    case 13:
    case 14:
      return Articulation::Limb;
    case 7:  // neck
    case 8:  // head
      return Articulation::Head;
    default:
      return Articulation::Rigid;
  }
}

Eigen::Matrix3d random_rotation(Rng& rng, double sigma) {
  if (sigma <= 0.0) {
    return Eigen::Matrix3d::Identity();
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector3d axis(normal(rng), normal(rng), normal(rng));
  if (axis.norm() < 1e-12) {
    axis = Eigen::Vector3d::UnitX();
  }
  const double angle = sigma * normal(rng);
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

} // namespace

Camera SynthCamera::intrinsics(int image_size) const {
  Camera c;
  c.fx = fx;
  c.fy = fy;
  c.cx = cx;
  c.cy = cy;
  c.width = image_size;
  c.height = image_size;
  return c;
}

void SynthParams::validate() const {
  double reach = 0.0;
  for (double len : bone_lengths) {
    PF_THROW_IF(!(len > 0.0), ErrorKind::InvalidArgument, "synthetic bone lengths must be positive");
    reach += len;
  }
  PF_THROW_IF(n_samples < 0, ErrorKind::InvalidArgument, "n_samples must be nonnegative");
  PF_THROW_IF(!(pose_jitter >= 0.0), ErrorKind::InvalidArgument, "pose_jitter must be nonnegative");
  PF_THROW_IF(!(yaw_range >= 0.0), ErrorKind::InvalidArgument, "yaw_range must be nonnegative");
  PF_THROW_IF(!(root_offset_mm >= 0.0), ErrorKind::InvalidArgument, "root_offset_mm must be nonnegative");
  PF_THROW_IF(image_size < 8, ErrorKind::InvalidArgument, "image_size must be at least 8");
  PF_THROW_IF(
      !(flic_nan_probability >= 0.0 && flic_nan_probability <= 1.0),
      ErrorKind::InvalidArgument,
      "flic_nan_probability must lie in [0, 1]");
  PF_THROW_IF(
      !(camera.fx > 0.0 && camera.fy > 0.0), ErrorKind::InvalidArgument, "focal lengths must be positive");
  // No joint is farther than the summed bone lengths from the pelvis.
  PF_THROW_IF(
      !(camera.depth_offset_mm > reach),
      ErrorKind::InvalidArgument,
      "depth_offset_mm {} must exceed the skeleton reach {} so every joint stays in front of the camera",
      camera.depth_offset_mm,
      reach);
}

Pose3D generate_pose3d(const SynthParams& params, Rng& rng) {
  params.validate();
  const auto& skel = canonical_skeleton();
  const auto& rest = rest_directions();

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double yaw = params.yaw_range * unit(rng);
  const double tx = params.root_offset_mm * unit(rng);
  const double ty = params.root_offset_mm * unit(rng);
  const Eigen::Matrix3d global = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();

  std::array<Eigen::Matrix3d, kNumJoints> frame;
  frame[kRootJoint] = global;

  Pose3D pose;
  pose.frame = Frame::CameraMm;
  pose.visible = all_visible();
  pose.coords[kRootJoint] = Eigen::Vector3d(tx, ty, params.camera.depth_offset_mm);
  for (int i = 0; i < kNumBones; ++i) {
    const Bone b = skel.bones[i];
    Eigen::Matrix3d local = Eigen::Matrix3d::Identity();
    switch (articulation(i)) {
      case Articulation::Limb:
        local = random_rotation(rng, params.pose_jitter);
        break;
      case Articulation::Head:
        local = random_rotation(rng, 0.3 * params.pose_jitter);
        break;
      case Articulation::Rigid:
        break;
    }
    frame[b.child] = frame[b.parent] * local;
    pose.coords[b.child] = pose.coords[b.parent] + params.bone_lengths[i] * (frame[b.child] * rest[i]);
  }
  return pose;
}

Pose2D project_to_2d(const Pose3D& camera_pose, const SynthCamera& camera, int image_size) {
  PF_THROW_IF(
      camera_pose.frame != Frame::CameraMm,
      ErrorKind::Precondition,
      "projection needs a camera-frame pose, got {}",
      frame_name(camera_pose.frame));
  for (int j = 0; j < kNumJoints; ++j) {
    PF_THROW_IF(
        !(camera_pose.coords[j].z() > 0.0),
        ErrorKind::Precondition,
        "joint {} has nonpositive depth {}",
        canonical_skeleton().joint_names[j],
        camera_pose.coords[j].z());
  }
  return project_pose(camera_pose, camera.intrinsics(image_size));
}

Pose2D snap_torso_midpoints(const Pose2D& pose) {
  Pose2D out = pose;
  auto snap = [&](J mid, J a, J b) {
    const int m = index_of(mid);
    if (pose.visible[index_of(a)] && pose.visible[index_of(b)]) {
      out.coords[m] = 0.5 * (pose.coords[index_of(a)] + pose.coords[index_of(b)]);
      out.visible[m] = true;
    } else {
      out.hide(m);
    }
  };
  snap(J::Pelvis, J::LHip, J::RHip);
  snap(J::Thorax, J::LShoulder, J::RShoulder);
  return out;
}

// ---------------------------------------------------------------------------
// Native-format emission

namespace {

class NativeBuilder {
 public:
  void set(std::string_view name, const Eigen::Vector3d& p) {
    values_[std::string(name)] = p;
  }
  const Eigen::Vector3d& get(std::string_view name) const {
    return values_.at(std::string(name));
  }
  Eigen::Vector3d lerp(std::string_view a, std::string_view b, double t) const {
    return get(a) + t * (get(b) - get(a));
  }

  std::vector<NamedJoint> build(std::span<const std::string_view> names, bool with_z) const {
    std::vector<NamedJoint> out;
    out.reserve(names.size());
    for (auto name : names) {
      const auto& p = values_.at(std::string(name));
      NamedJoint j;
      j.name = std::string(name);
      j.x = p.x();
      j.y = p.y();
      if (with_z) {
        j.z = p.z();
      }
      out.push_back(std::move(j));
    }
    return out;
  }

 private:
  std::unordered_map<std::string, Eigen::Vector3d> values_;
};

Eigen::Vector3d planar(const Pose2D& pose, J joint) {
  const int j = index_of(joint);
  if (!pose.visible[j]) {
    return Eigen::Vector3d(kNaN, kNaN, 0.0);
  }
  return Eigen::Vector3d(pose.coords[j].x(), pose.coords[j].y(), 0.0);
}

std::vector<NamedJoint> emit_mpii(const Pose2D& pose) {
  const auto names = native_joint_names(DatasetId::Mpii);
  NativeBuilder b;
  for (int j = 0; j < kNumJoints; ++j) {
    b.set(names[j], planar(pose, static_cast<J>(j)));
  }
  return b.build(names, false);
}

std::vector<NamedJoint> emit_lsp(const Pose2D& pose) {
  NativeBuilder b;
  b.set("r_ankle", planar(pose, J::RAnkle));
  b.set("r_knee", planar(pose, J::RKnee));
  b.set("r_hip", planar(pose, J::RHip));
  b.set("l_hip", planar(pose, J::LHip));
  b.set("l_knee", planar(pose, J::LKnee));
  b.set("l_ankle", planar(pose, J::LAnkle));
  b.set("r_wrist", planar(pose, J::RWrist));
  b.set("r_elbow", planar(pose, J::RElbow));
  b.set("r_shoulder", planar(pose, J::RShoulder));
  b.set("l_shoulder", planar(pose, J::LShoulder));
  b.set("l_elbow", planar(pose, J::LElbow));
  b.set("l_wrist", planar(pose, J::LWrist));
  b.set("neck", planar(pose, J::Neck));
  b.set("head_top", planar(pose, J::HeadTop));
  return b.build(native_joint_names(DatasetId::Lsp), false);
}

std::vector<NamedJoint> emit_flic(const Pose2D& pose, Rng& rng, double nan_probability) {
  // Occlusions are drawn for the 16 mapped joints in canonical order.
  Pose2D occluded = pose;
  std::bernoulli_distribution drop(nan_probability);
  for (int j = 0; j < kNumJoints; ++j) {
    if (drop(rng)) {
      occluded.hide(j);
    }
  }
  NativeBuilder b;
  b.set("lsho", planar(occluded, J::LShoulder));
  b.set("lelb", planar(occluded, J::LElbow));
  b.set("lwri", planar(occluded, J::LWrist));
  b.set("rsho", planar(occluded, J::RShoulder));
  b.set("relb", planar(occluded, J::RElbow));
  b.set("rwri", planar(occluded, J::RWrist));
  b.set("lhip", planar(occluded, J::LHip));
  b.set("lkne", planar(occluded, J::LKnee));
  b.set("lank", planar(occluded, J::LAnkle));
  b.set("rhip", planar(occluded, J::RHip));
  b.set("rkne", planar(occluded, J::RKnee));
  b.set("rank", planar(occluded, J::RAnkle));
  b.set("nose", planar(occluded, J::HeadTop));
  b.set("msho", planar(occluded, J::Neck));
  b.set("mhip", planar(occluded, J::Pelvis));
  b.set("mtorso", planar(occluded, J::Thorax));
  // Face points hang off the head segment; NaN propagates from missing parents.
  const Eigen::Vector3d up = b.get("nose") - b.get("msho");
  const Eigen::Vector3d side(-up.y(), up.x(), 0.0);
  b.set("leye", b.get("nose") - 0.3 * up + 0.15 * side);
  b.set("reye", b.get("nose") - 0.3 * up - 0.15 * side);
  b.set("lear", b.get("nose") - 0.4 * up + 0.3 * side);
  b.set("rear", b.get("nose") - 0.4 * up - 0.3 * side);
  b.set("mear", b.get("nose") - 0.4 * up);
  b.set("mluarm", b.lerp("lsho", "lelb", 0.5));
  b.set("mruarm", b.lerp("rsho", "relb", 0.5));
  b.set("mllarm", b.lerp("lelb", "lwri", 0.5));
  b.set("mrlarm", b.lerp("relb", "rwri", 0.5));
  b.set("mluleg", b.lerp("lhip", "lkne", 0.5));
  b.set("mruleg", b.lerp("rhip", "rkne", 0.5));
  b.set("mllleg", b.lerp("lkne", "lank", 0.5));
  b.set("mrlleg", b.lerp("rkne", "rank", 0.5));
  return b.build(native_joint_names(DatasetId::Flic), false);
}

Eigen::Vector3d at(const Pose3D& pose, J joint) {
  return pose.coords[index_of(joint)];
}

std::vector<NamedJoint> emit_h36m(const Pose3D& pose) {
  NativeBuilder b;
  b.set("hip", at(pose, J::Pelvis));
  b.set("r_hip", at(pose, J::RHip));
  b.set("r_knee", at(pose, J::RKnee));
  b.set("r_foot", at(pose, J::RAnkle));
  b.set("l_hip", at(pose, J::LHip));
  b.set("l_knee", at(pose, J::LKnee));
  b.set("l_foot", at(pose, J::LAnkle));
  b.set("spine", at(pose, J::Thorax));
  b.set("neck_nose", at(pose, J::Neck));
  b.set("head", at(pose, J::HeadTop));
  // Native thorax sits between our thorax and neck; the converter ignores it.
  b.set("thorax", 0.5 * (at(pose, J::Thorax) + at(pose, J::Neck)));
  b.set("l_shoulder", at(pose, J::LShoulder));
  b.set("l_elbow", at(pose, J::LElbow));
  b.set("l_wrist", at(pose, J::LWrist));
  b.set("r_shoulder", at(pose, J::RShoulder));
  b.set("r_elbow", at(pose, J::RElbow));
  b.set("r_wrist", at(pose, J::RWrist));
  return b.build(native_joint_names(DatasetId::H36m), true);
}

std::vector<NamedJoint> emit_mpii3d(const Pose3D& pose, bool test_layout) {
  NativeBuilder b;
  b.set("pelvis", at(pose, J::Pelvis));
  b.set("spine4", at(pose, J::Thorax));
  b.set("spine", b.lerp("pelvis", "spine4", 0.25));
  b.set("spine2", b.lerp("pelvis", "spine4", 0.5));
  b.set("spine3", b.lerp("pelvis", "spine4", 0.75));
  b.set("neck", at(pose, J::Neck));
  b.set("head_top", at(pose, J::HeadTop));
  b.set("head", b.lerp("neck", "head_top", 0.5));
  const std::array<std::pair<const char*, std::array<J, 6>>, 2> sides = {{
      {"left_", {J::LShoulder, J::LElbow, J::LWrist, J::LHip, J::LKnee, J::LAnkle}},
      {"right_", {J::RShoulder, J::RElbow, J::RWrist, J::RHip, J::RKnee, J::RAnkle}},
  }};
  for (const auto& [prefix, joints] : sides) {
    const std::string p = prefix;
    b.set(p + "shoulder", at(pose, joints[0]));
    b.set(p + "elbow", at(pose, joints[1]));
    b.set(p + "wrist", at(pose, joints[2]));
    b.set(p + "hip", at(pose, joints[3]));
    b.set(p + "knee", at(pose, joints[4]));
    b.set(p + "ankle", at(pose, joints[5]));
    b.set(p + "clavicle", b.lerp("spine4", p + "shoulder", 0.5));
    b.set(p + "hand", b.lerp(p + "elbow", p + "wrist", 1.3));
    b.set(p + "foot", at(pose, joints[5]) + Eigen::Vector3d(0.0, 60.0, -90.0));
    b.set(p + "toe", at(pose, joints[5]) + Eigen::Vector3d(0.0, 70.0, -160.0));
  }
  return b.build(native_joint_names(DatasetId::Mpii3d, test_layout), true);
}

std::vector<NamedJoint> emit_op(const Pose3D& pose) {
  NativeBuilder b;
  b.set("pelvis", at(pose, J::Pelvis));
  b.set("r_hip", at(pose, J::RHip));
  b.set("r_knee", at(pose, J::RKnee));
  b.set("r_ankle", at(pose, J::RAnkle));
  b.set("l_hip", at(pose, J::LHip));
  b.set("l_knee", at(pose, J::LKnee));
  b.set("l_ankle", at(pose, J::LAnkle));
  b.set("belly", 0.5 * (at(pose, J::Pelvis) + at(pose, J::Thorax)));
  b.set("neck", at(pose, J::Neck));
  b.set("l_shoulder", at(pose, J::LShoulder));
  b.set("l_elbow", at(pose, J::LElbow));
  b.set("l_wrist", at(pose, J::LWrist));
  b.set("r_shoulder", at(pose, J::RShoulder));
  b.set("r_elbow", at(pose, J::RElbow));
  b.set("r_wrist", at(pose, J::RWrist));
  return b.build(native_joint_names(DatasetId::Op), true);
}

} // namespace

RawRecord emit_source_format(
    const std::variant<Pose2D, Pose3D>& pose,
    DatasetId target,
    Rng& rng,
    const EmitOptions& options) {
  RawRecord r;
  r.dataset = target;
  r.split = options.split;
  r.image = options.image;
  if (!is_3d_dataset(target)) {
    const Pose2D* p2 = std::get_if<Pose2D>(&pose);
    PF_THROW_IF(
        p2 == nullptr,
        ErrorKind::InvalidArgument,
        "{} is a 2D format and needs a 2D pose",
        dataset_name(target));
    switch (target) {
      case DatasetId::Mpii:
        r.joints = emit_mpii(*p2);
        break;
      case DatasetId::Lsp:
        r.joints = emit_lsp(*p2);
        break;
      default:
        r.joints = emit_flic(*p2, rng, options.flic_nan_probability);
        break;
    }
    return r;
  }

  const Pose3D* p3 = std::get_if<Pose3D>(&pose);
  PF_THROW_IF(
      p3 == nullptr, ErrorKind::InvalidArgument, "{} is a 3D format and needs a 3D pose", dataset_name(target));
  PF_THROW_IF(
      p3->frame != Frame::CameraMm,
      ErrorKind::Precondition,
      "3D formats store camera-frame poses, got {}",
      frame_name(p3->frame));
  switch (target) {
    case DatasetId::H36m:
      r.joints = emit_h36m(*p3);
      break;
    case DatasetId::Mpii3d:
      r.joints = emit_mpii3d(*p3, options.split == Split::Test);
      break;
    default:
      r.joints = emit_op(*p3);
      break;
  }
  r.camera = options.camera;
  return r;
}

// ---------------------------------------------------------------------------
// Rendering

std::array<uint8_t, 2> joint_color_code(int joint) {
  PF_THROW_IF(joint < 0 || joint >= kNumJoints, ErrorKind::InvalidArgument, "joint index {} out of range", joint);
  static constexpr std::array<uint8_t, 4> kLevels = {64, 128, 191, 255};
  return {kLevels[joint % 4], kLevels[joint / 4]};
}

uint8_t depth_color_code(double depth_mm) {
  const double level = std::clamp(0.55 - depth_mm / 1000.0, 0.02, 1.0);
  return static_cast<uint8_t>(std::lround(255.0 * level));
}

namespace {

constexpr double kLimbHalfWidth = 0.6;
constexpr double kJointRadius = 1.75;
constexpr uint8_t kLimbGray = 150;
constexpr int kNoiseMax = 55;

uint64_t pose_fingerprint(const Pose2D& pose, int size, const std::optional<std::array<double, kNumJoints>>& depth) {
  uint64_t h = fnv1a(std::to_string(size));
  for (int j = 0; j < kNumJoints; ++j) {
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(pose.coords[j].data()), 2 * sizeof(double)), h);
    h = fnv1a(pose.visible[j] ? "1" : "0", h);
    if (depth) {
      h = fnv1a(std::string_view(reinterpret_cast<const char*>(&(*depth)[j]), sizeof(double)), h);
    }
  }
  return h;
}

void blend(Image& img, int x, int y, double alpha, const std::array<uint8_t, 3>& color) {
  uint8_t* px = img.pixel(x, y);
  for (int c = 0; c < 3; ++c) {
    const double v = (1.0 - alpha) * px[c] + alpha * color[c];
    px[c] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  }
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

void draw_limb(Image& img, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double pad = kLimbHalfWidth + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - pad)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + pad)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - pad)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + pad)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = segment_distance(Eigen::Vector2d(x, y), a, b);
      const double alpha = std::clamp(kLimbHalfWidth + 0.5 - d, 0.0, 1.0);
      if (alpha > 0.0) {
        blend(img, x, y, alpha, {kLimbGray, kLimbGray, kLimbGray});
      }
    }
  }
}

void draw_disk(Image& img, const Eigen::Vector2d& c, const std::array<uint8_t, 3>& color) {
  const double pad = kJointRadius + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x() - pad)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(c.x() + pad)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y() - pad)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(c.y() + pad)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = (Eigen::Vector2d(x, y) - c).norm();
      const double alpha = std::clamp(kJointRadius + 0.5 - d, 0.0, 1.0);
      if (alpha > 0.0) {
        blend(img, x, y, alpha, color);
      }
    }
  }
}

} // namespace

Image render_pose_image(const Pose2D& pose, int image_size) {
  return render_pose_image(pose, image_size, std::nullopt);
}

Image render_pose_image(
    const Pose2D& pose,
    int image_size,
    const std::optional<std::array<double, kNumJoints>>& depth_mm) {
  PF_THROW_IF(image_size < 1, ErrorKind::InvalidArgument, "image size must be positive, got {}", image_size);
  Image img(image_size, image_size);
  Rng rng(pose_fingerprint(pose, image_size, depth_mm));
  std::uniform_int_distribution<int> noise(0, kNoiseMax);
  for (auto& v : img.rgb) {
    v = static_cast<uint8_t>(noise(rng));
  }
  for (const Bone b : canonical_skeleton().bones) {
    if (pose.visible[b.parent] && pose.visible[b.child]) {
      draw_limb(img, pose.coords[b.parent], pose.coords[b.child]);
    }
  }
  for (int j = 0; j < kNumJoints; ++j) {
    if (!pose.visible[j]) {
      continue;
    }
    const auto rg = joint_color_code(j);
    const uint8_t blue = depth_color_code(depth_mm ? (*depth_mm)[j] : 0.0);
    draw_disk(img, pose.coords[j], {rg[0], rg[1], blue});
  }
  return img;
}

// ---------------------------------------------------------------------------
// Dataset generation

SynthDatasetSummary generate_dataset(
    const SynthParams& params,
    DatasetId target,
    Split split,
    const std::filesystem::path& out_dir,
    bool harmonize) {
  params.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  PF_THROW_IF(ec, ErrorKind::Io, "cannot create {}: {}", (out_dir / "images").string(), ec.message());

  Rng rng(params.seed);
  const Camera intrinsics = params.camera.intrinsics(params.image_size);
  std::vector<RawRecord> records;
  records.reserve(static_cast<size_t>(params.n_samples));
  for (int i = 0; i < params.n_samples; ++i) {
    const Pose3D pose3d = generate_pose3d(params, rng);
    std::array<double, kNumJoints> depth{};
    for (int j = 0; j < kNumJoints; ++j) {
      depth[j] = pose3d.coords[j].z() - pose3d.coords[kRootJoint].z();
    }

    EmitOptions opts;
    opts.flic_nan_probability = params.flic_nan_probability;
    opts.split = split;
    opts.image = fmt::format("images/{:06d}.ppm", i);
    Pose2D pose2d = project_to_2d(pose3d, params.camera, params.image_size);
    RawRecord record;
    if (is_3d_dataset(target)) {
      opts.camera = intrinsics;
      record = emit_source_format(pose3d, target, rng, opts);
    } else {
      pose2d = snap_torso_midpoints(pose2d);
      record = emit_source_format(pose2d, target, rng, opts);
    }
    write_ppm(render_pose_image(pose2d, params.image_size, depth), out_dir / opts.image);
    records.push_back(std::move(record));
  }
  write_records(records, out_dir / "records.jsonl");

  SynthDatasetSummary summary;
  summary.records = records.size();
  if (harmonize) {
    std::vector<HarmonizedSample> samples;
    samples.reserve(records.size());
    for (const auto& r : records) {
      samples.push_back(harmonize_record(r));
      summary.excluded += samples.back().excluded ? 1 : 0;
    }
    write_samples(samples, out_dir / "samples.jsonl");
    summary.samples = samples.size();
  }
  return summary;
}

} // namespace posefuse
