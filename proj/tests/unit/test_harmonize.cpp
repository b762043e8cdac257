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

#include "fixtures.hpp"

#include "posefuse/harmonize.hpp"
#include "posefuse/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace posefuse;

namespace {

// Record whose joint k sits at (k, 2k[, 3000 + 3k]) unless overridden later.
RawRecord make_record(DatasetId id, bool mpii3d_test = false) {
  RawRecord r;
  r.dataset = id;
  r.split = mpii3d_test ? Split::Test : Split::Train;
  r.image = "img.ppm";
  const auto names = native_joint_names(id, mpii3d_test);
  for (size_t k = 0; k < names.size(); ++k) {
    NamedJoint j;
    j.name = std::string(names[k]);
    j.x = 10.0 + static_cast<double>(k);
    j.y = 20.0 + 2.0 * static_cast<double>(k);
    if (is_3d_dataset(id)) {
      j.z = 3000.0 + 3.0 * static_cast<double>(k);
    }
    r.joints.push_back(j);
  }
  if (is_3d_dataset(id)) {
    r.camera = Camera{500, 500, 32, 32, std::nullopt, std::nullopt};
  }
  return r;
}

NamedJoint& joint(RawRecord& r, std::string_view name) {
  for (auto& j : r.joints) {
    if (j.name == name) {
      return j;
    }
  }
  throw std::runtime_error("no joint " + std::string(name));
}

const NamedJoint& joint(const RawRecord& r, std::string_view name) {
  return joint(const_cast<RawRecord&>(r), name);
}

bool no_nan(const Pose2D& p) {
  for (const auto& c : p.coords) {
    if (!c.allFinite()) {
      return false;
    }
  }
  return true;
}

bool no_nan(const Pose3D& p) {
  for (const auto& c : p.coords) {
    if (!c.allFinite()) {
      return false;
    }
  }
  return true;
}

} // namespace

TEST_SUITE("harmonize") {

TEST_CASE("lsp: midpoints for thorax and pelvis") {
  RawRecord r = make_record(DatasetId::Lsp);
  joint(r, "l_shoulder").x = 2;
  joint(r, "l_shoulder").y = 0;
  joint(r, "r_shoulder").x = 4;
  joint(r, "r_shoulder").y = 0;
  joint(r, "l_hip").x = 0;
  joint(r, "l_hip").y = 10;
  joint(r, "r_hip").x = 0;
  joint(r, "r_hip").y = 14;
  const Pose2D p = convert_lsp(r);
  CHECK(p.coords[index_of(Joint::Thorax)] == Eigen::Vector2d(3, 0));
  CHECK(p.coords[index_of(Joint::Pelvis)] == Eigen::Vector2d(0, 12));
  CHECK(p.coords[index_of(Joint::RElbow)] == Eigen::Vector2d(joint(r, "r_elbow").x, joint(r, "r_elbow").y));

  r.joints.pop_back();
  CHECK(fixtures::error_kind_of([&] { convert_lsp(r); }) == ErrorKind::Precondition);
}

TEST_CASE("flic: torso, shoulder and nose substitutions with NaN masking") {
  RawRecord r = make_record(DatasetId::Flic);
  joint(r, "nose").x = 50;
  joint(r, "nose").y = 20;
  Pose2D p = convert_flic(r);
  CHECK(p.coords[index_of(Joint::HeadTop)] == Eigen::Vector2d(50, 20));
  CHECK(p.visible[index_of(Joint::HeadTop)]);
  CHECK(p.coords[index_of(Joint::Thorax)] == Eigen::Vector2d(joint(r, "mtorso").x, joint(r, "mtorso").y));
  CHECK(p.coords[index_of(Joint::Neck)] == Eigen::Vector2d(joint(r, "msho").x, joint(r, "msho").y));
  for (bool v : p.visible) {
    CHECK(v);
  }

  joint(r, "lwri").x = std::numeric_limits<double>::quiet_NaN();
  joint(r, "lwri").y = std::numeric_limits<double>::quiet_NaN();
  HarmonizeStats stats;
  const HarmonizedSample s = harmonize_record(r, std::nullopt, &stats);
  CHECK(s.pose2d.coords[index_of(Joint::LWrist)] == Eigen::Vector2d(0, 0));
  CHECK_FALSE(s.pose2d.visible[index_of(Joint::LWrist)]);
  CHECK(stats.nan_substituted == 1);
  CHECK(no_nan(s.pose2d));
}

TEST_CASE("h36m: spine becomes thorax, other joints copied bit-exactly") {
  RawRecord r = make_record(DatasetId::H36m);
  joint(r, "spine").x = 10;
  joint(r, "spine").y = 20;
  joint(r, "spine").z = 30;
  joint(r, "r_foot").x = 0.1 + 0.2;
  const Pose3D p = convert_h36m(r);
  CHECK(p.coords[index_of(Joint::Thorax)] == Eigen::Vector3d(10, 20, 30));
  CHECK(p.coords[index_of(Joint::RAnkle)].x() == 0.1 + 0.2);
  CHECK(p.frame == Frame::CameraMm);

  r.joints.pop_back();
  CHECK(fixtures::error_kind_of([&] { convert_h36m(r); }) == ErrorKind::Precondition);
}

TEST_CASE("mpii3d: nearest spine joint to the shoulder midpoint") {
  RawRecord r = make_record(DatasetId::Mpii3d);
  const Eigen::Vector3d mid =
      0.5 * (Eigen::Vector3d(joint(r, "left_shoulder").x, joint(r, "left_shoulder").y, *joint(r, "left_shoulder").z) +
             Eigen::Vector3d(joint(r, "right_shoulder").x, joint(r, "right_shoulder").y, *joint(r, "right_shoulder").z));
  // Place spine4 closest, the others progressively farther.
  const char* spines[] = {"spine", "spine2", "spine3", "spine4"};
  const double offsets[] = {400, 300, 200, 15};
  for (int i = 0; i < 4; ++i) {
    auto& j = joint(r, spines[i]);
    j.x = mid.x();
    j.y = mid.y() + offsets[i];
    j.z = mid.z();
  }
  // Brute-force oracle over the spine chain.
  std::string best;
  double best_d = 1e300;
  for (const auto& j : r.joints) {
    if (j.name.rfind("spine", 0) == 0) {
      const double d = (Eigen::Vector3d(j.x, j.y, *j.z) - mid).norm();
      if (d < best_d) {
        best_d = d;
        best = j.name;
      }
    }
  }
  REQUIRE(best == "spine4");
  const Pose3D p = convert_mpii3d(r);
  const auto& b = joint(r, best);
  CHECK(p.coords[index_of(Joint::Thorax)] == Eigen::Vector3d(b.x, b.y, *b.z));

  RawRecord t = make_record(DatasetId::Mpii3d, true);
  const Pose3D pt = convert_mpii3d(t);
  const auto& spine = joint(t, "spine");
  CHECK(pt.coords[index_of(Joint::Thorax)] == Eigen::Vector3d(spine.x, spine.y, *spine.z));

  RawRecord none = t;
  joint(none, "spine").name = "belly";
  CHECK(fixtures::error_kind_of([&] { convert_mpii3d(none); }) == ErrorKind::Precondition);
}

TEST_CASE("op: shoulder midpoint thorax and neck copied to head top") {
  RawRecord r = make_record(DatasetId::Op);
  joint(r, "l_shoulder") = {"l_shoulder", 100, 0, 0.0};
  joint(r, "r_shoulder") = {"r_shoulder", -100, 0, 0.0};
  joint(r, "neck") = {"neck", 0, 50, 10.0};
  const Pose3D p = convert_op(r);
  CHECK(p.coords[index_of(Joint::Thorax)] == Eigen::Vector3d(0, 0, 0));
  CHECK(p.coords[index_of(Joint::HeadTop)] == Eigen::Vector3d(0, 50, 10));
  CHECK(p.coords[index_of(Joint::Neck)] == p.coords[index_of(Joint::HeadTop)]);

  r.joints.pop_back();
  CHECK(fixtures::error_kind_of([&] { convert_op(r); }) == ErrorKind::Precondition);
}

TEST_CASE("converter rejects a record of another dataset") {
  const RawRecord r = make_record(DatasetId::Mpii);
  CHECK(fixtures::error_kind_of([&] { convert_lsp(r); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("root alignment") {
  Pose3D p;
  p.frame = Frame::CameraMm;
  p.coords[index_of(Joint::Pelvis)] = {5, 5, 5};
  p.coords[index_of(Joint::HeadTop)] = {5, 5, 105};
  const Pose3D a = root_align(p);
  CHECK(a.coords[index_of(Joint::HeadTop)] == Eigen::Vector3d(0, 0, 100));
  CHECK(a.coords[kRootJoint] == Eigen::Vector3d::Zero());
  CHECK(a.frame == Frame::RootAlignedMm);
  const Pose3D twice = root_align(a);
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK(twice.coords[j] == a.coords[j]);
  }
  Pose3D zero_root;
  zero_root.frame = Frame::CameraMm;
  zero_root.coords[3] = {1, 2, 3};
  CHECK(root_align(zero_root).coords[3] == Eigen::Vector3d(1, 2, 3));
}

TEST_CASE("depth scale examples") {
  Pose3D p3;
  p3.frame = Frame::RootAlignedMm;
  Pose2D p2;
  p2.visible.fill(false);
  p2.visible[kRootJoint] = true;
  p2.coords[kRootJoint] = {32, 32};
  p3.coords[1] = {100, 0, 40};
  p3.coords[2] = {0, 100, -10};
  p2.coords[1] = {32 + 50, 32};
  p2.coords[2] = {32, 32 + 50};
  p2.visible[1] = p2.visible[2] = true;
  CHECK(solve_depth_scale(p3, p2) == 0.5);

  fixtures::Rng rng(1);
  Pose3D q = fixtures::random_pose3d(rng);
  q.coords[kRootJoint].setZero();
  Pose2D exact;
  for (int j = 0; j < kNumJoints; ++j) {
    exact.coords[j] = q.coords[j].head<2>();
    exact.visible[j] = true;
  }
  CHECK(std::abs(solve_depth_scale(q, exact) - 1.0) < 1e-9);

  Pose3D flat;
  flat.frame = Frame::RootAlignedMm;
  CHECK(fixtures::error_kind_of([&] { solve_depth_scale(flat, exact); }) == ErrorKind::Precondition);
}

TEST_CASE("depth scale agrees with the closed-form oracle") {
  fixtures::Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    Pose3D q = fixtures::random_pose3d(rng);
    q.coords[kRootJoint].setZero();
    const Pose2D p = fixtures::random_pose2d(rng, 64.0, 0.2);
    Pose2D p2 = p;
    p2.visible[kRootJoint] = true;
    p2.visible[1] = p2.visible[2] = true;
    q.visible = all_visible();
    CHECK(fixtures::rel_err(solve_depth_scale(q, p2), oracle::lsq_scale(fixtures::to_oracle(q), fixtures::to_oracle(p2))) < 1e-9);
  }
}

TEST_CASE("scale_depth") {
  Pose3D p;
  p.frame = Frame::RootAlignedMm;
  p.coords[4].z() = 200;
  const auto d = scale_depth(p, 0.5);
  CHECK(d[4] == 100.0);
  CHECK(d[kRootJoint] == 0.0);
  CHECK(fixtures::error_kind_of([&] { scale_depth(p, 0.0); }) == ErrorKind::Precondition);
}

TEST_CASE("harmonize_record: 2D and 3D samples") {
  const HarmonizedSample m = harmonize_record(make_record(DatasetId::Mpii));
  CHECK(m.source == SampleSource::Set2D);
  CHECK_FALSE(m.pose3d.has_value());
  CHECK_FALSE(m.depth.has_value());

  SynthParams params;
  fixtures::Rng rng(7);
  const Pose3D cam = generate_pose3d(params, rng);
  EmitOptions opts;
  opts.camera = params.camera.intrinsics(params.image_size);
  const RawRecord r = emit_source_format(cam, DatasetId::H36m, rng, opts);
  const HarmonizedSample s = harmonize_record(r);
  REQUIRE(s.source == SampleSource::Set3D);
  REQUIRE(s.pose3d.has_value());
  REQUIRE(s.depth.has_value());
  CHECK(s.pose3d->coords[kRootJoint] == Eigen::Vector3d::Zero());
  CHECK(s.scale > 0.0);
  for (int j = 0; j < kNumJoints; ++j) {
    const double z = cam.coords[j].z() - cam.coords[kRootJoint].z();
    CHECK(std::abs((*s.depth)[j] - z * s.scale) < 1e-6);
  }

  const HarmonizedSample op = harmonize_record(emit_source_format(cam, DatasetId::Op, rng, opts));
  const Eigen::Vector3d mid = 0.5 * (op.pose3d->coords[index_of(Joint::LShoulder)] + op.pose3d->coords[index_of(Joint::RShoulder)]);
  CHECK((op.pose3d->coords[index_of(Joint::Thorax)] - mid).norm() < 1e-9);

  RawRecord no_cam = r;
  no_cam.camera.reset();
  CHECK(fixtures::error_kind_of([&] { harmonize_record(no_cam); }) == ErrorKind::Precondition);
}

TEST_CASE("degenerate 3D record is excluded, not fatal") {
  RawRecord r = make_record(DatasetId::H36m);
  for (auto& j : r.joints) {
    j.x = 0;
    j.y = 0;
  }
  const HarmonizedSample s = harmonize_record(r);
  CHECK(s.excluded);
}

TEST_CASE("harmonize is deterministic and NaN-free for every format") {
  for (DatasetId id : {DatasetId::Mpii, DatasetId::Lsp, DatasetId::Flic, DatasetId::H36m, DatasetId::Mpii3d, DatasetId::Op}) {
    const RawRecord r = make_record(id);
    const HarmonizedSample a = harmonize_record(r);
    const HarmonizedSample b = harmonize_record(r);
    CHECK(sample_to_json(a).dump() == sample_to_json(b).dump());
    CHECK(no_nan(a.pose2d));
    if (a.pose3d) {
      CHECK(no_nan(*a.pose3d));
    }
  }
}

} // TEST_SUITE
