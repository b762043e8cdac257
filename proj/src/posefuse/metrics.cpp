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

#include "posefuse/metrics.hpp"

#include "posefuse/error.hpp"
#include "posefuse/losses.hpp"

#include <cmath>
#include <limits>

namespace posefuse {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

double mpjpe(const Pose3D& pred, const Pose3D& gt, const Visibility& visibility) {
  PF_THROW_IF(
      pred.frame != gt.frame,
      ErrorKind::InvalidArgument,
      "MPJPE frame mismatch: {} vs {}",
      frame_name(pred.frame),
      frame_name(gt.frame));
  CompensatedSum sum;
  int count = 0;
  for (int j = 0; j < kNumJoints; ++j) {
    if (!visibility[j]) {
      continue;
    }
    sum.add((pred.coords[j] - gt.coords[j]).norm());
    ++count;
  }
  PF_THROW_IF(count == 0, ErrorKind::Precondition, "MPJPE needs at least one visible joint");
  return sum.value() / count;
}

double head_segment_length(const Pose2D& gt) {
  const int neck = index_of(Joint::Neck);
  const int top = index_of(Joint::HeadTop);
  PF_THROW_IF(
      !gt.visible[neck] || !gt.visible[top],
      ErrorKind::Precondition,
      "PCKh needs visible neck and head_top in the ground truth");
  const double len = (gt.coords[top] - gt.coords[neck]).norm();
  PF_THROW_IF(!(len > 0.0), ErrorKind::Precondition, "zero-length head segment");
  return len;
}

double pckh(std::span<const Pose2D> preds, std::span<const Pose2D> gts, double threshold_fraction) {
  PF_THROW_IF(
      preds.size() != gts.size(),
      ErrorKind::InvalidArgument,
      "PCKh got {} predictions for {} ground truths",
      preds.size(),
      gts.size());
  PF_THROW_IF(!(threshold_fraction > 0.0), ErrorKind::InvalidArgument, "threshold fraction must be positive");
  size_t correct = 0;
  size_t total = 0;
  for (size_t i = 0; i < gts.size(); ++i) {
    const double threshold = threshold_fraction * head_segment_length(gts[i]);
    for (int j = 0; j < kNumJoints; ++j) {
      if (!gts[i].visible[j]) {
        continue;
      }
      ++total;
      if ((preds[i].coords[j] - gts[i].coords[j]).norm() <= threshold) {
        ++correct;
      }
    }
  }
  PF_THROW_IF(total == 0, ErrorKind::Precondition, "PCKh needs at least one visible joint");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

const std::vector<BoneGroup>& reference_bone_groups() {
  static const std::vector<BoneGroup> groups =
      default_bone_groups(canonical_skeleton(), reference_pose(default_reference_lengths()));
  return groups;
}

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string cell(double v, int precision) {
  return std::isfinite(v) ? fmt::format("{:.{}f}", v, precision) : std::string("-");
}

} // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_joint = nlohmann::json::array();
  const auto& names = canonical_skeleton().joint_names;
  for (int j = 0; j < kNumJoints; ++j) {
    per_joint.push_back(
        {{"joint", names[j]}, {"mpjpe_mm", finite_or_null(per_joint_mpjpe[j])}, {"pckh", finite_or_null(per_joint_pckh[j])}});
  }
  return {
      {"dataset", dataset},
      {"pckh_at_05", finite_or_null(pckh_at_05)},
      {"mpjpe_mm", finite_or_null(mpjpe_mm)},
      {"sample_count", sample_count},
      {"mpjpe_samples", mpjpe_samples},
      {"skipped", skipped},
      {"bone_ratio_variance", finite_or_null(bone_ratio_variance)},
      {"per_joint", per_joint},
  };
}

std::string EvalReport::to_table(bool per_joint) const {
  std::string out = fmt::format("{:<10} {:>8} {:>12} {:>16} {:>10}\n", "Dataset", "Samples", "PCKh@0.5", "Test MPJPE (mm)", "Skipped");
  out += fmt::format(
      "{:<10} {:>8} {:>12} {:>16} {:>10}\n", dataset, sample_count, cell(pckh_at_05, 2), cell(mpjpe_mm, 2), skipped);
  if (per_joint) {
    out += fmt::format("\n{:<12} {:>12} {:>10}\n", "Joint", "MPJPE (mm)", "PCKh");
    const auto& names = canonical_skeleton().joint_names;
    for (int j = 0; j < kNumJoints; ++j) {
      out += fmt::format("{:<12} {:>12} {:>10}\n", names[j], cell(per_joint_mpjpe[j], 2), cell(per_joint_pckh[j], 2));
    }
  }
  return out;
}

EvalReport evaluate(const Network& network, const Dataset& dataset, Decode decode) {
  PF_THROW_IF(dataset.size() == 0, ErrorKind::Precondition, "cannot evaluate an empty dataset");
  PF_THROW_IF(
      dataset.images.size() != dataset.samples.size(), ErrorKind::InvalidArgument, "dataset images are missing");

  EvalReport report;
  report.dataset = std::string(dataset_name(dataset.samples.front().dataset));
  for (const auto& s : dataset.samples) {
    if (s.dataset != dataset.samples.front().dataset) {
      report.dataset = "mixed";
      break;
    }
  }

  std::array<CompensatedSum, kNumJoints> joint_err;
  std::array<size_t, kNumJoints> joint_err_n{};
  std::array<size_t, kNumJoints> joint_hit{};
  std::array<size_t, kNumJoints> joint_seen{};
  CompensatedSum err_total;
  size_t err_n = 0;
  size_t hits = 0;
  size_t seen = 0;
  CompensatedSum ratio_var;
  size_t ratio_n = 0;

  const auto& groups = reference_bone_groups();
  for (size_t i = 0; i < dataset.size(); ++i) {
    const HarmonizedSample& s = dataset.samples[i];
    if (s.excluded) {
      ++report.skipped;
      continue;
    }
    double head = 0.0;
    try {
      head = head_segment_length(s.pose2d);
    } catch (const Error&) {
      ++report.skipped;
      continue;
    }
    ++report.sample_count;
    const Pose3D pred = predict_pose3d(network, dataset.images[i], decode);

    for (int j = 0; j < kNumJoints; ++j) {
      if (!s.pose2d.visible[j]) {
        continue;
      }
      ++seen;
      ++joint_seen[j];
      if ((pred.coords[j].head<2>() - s.pose2d.coords[j]).norm() <= 0.5 * head) {
        ++hits;
        ++joint_hit[j];
      }
    }

    Pose3D visible_pred = pred;
    visible_pred.visible = s.pose2d.visible;
    ratio_var.add(loss_geometric(visible_pred, groups));
    ++ratio_n;

    if (s.source != SampleSource::Set3D || !s.pose3d || !(s.scale > 0.0)) {
      continue;
    }
    ++report.mpjpe_samples;
    const Eigen::Vector3d root = pred.coords[kRootJoint];
    for (int j = 0; j < kNumJoints; ++j) {
      if (!s.pose3d->visible[j]) {
        continue;
      }
      const Eigen::Vector3d mm(
          (pred.coords[j].x() - root.x()) / s.scale,
          (pred.coords[j].y() - root.y()) / s.scale,
          pred.coords[j].z() / s.scale);
      const double e = (mm - s.pose3d->coords[j]).norm();
      joint_err[j].add(e);
      ++joint_err_n[j];
      err_total.add(e);
      ++err_n;
    }
  }

  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  report.pckh_at_05 = seen > 0 ? 100.0 * static_cast<double>(hits) / static_cast<double>(seen) : kNaN;
  report.mpjpe_mm = err_n > 0 ? err_total.value() / static_cast<double>(err_n) : kNaN;
  report.bone_ratio_variance = ratio_n > 0 ? ratio_var.value() / static_cast<double>(ratio_n) : kNaN;
  for (int j = 0; j < kNumJoints; ++j) {
    report.per_joint_mpjpe[j] = joint_err_n[j] > 0 ? joint_err[j].value() / static_cast<double>(joint_err_n[j]) : kNaN;
    report.per_joint_pckh[j] =
        joint_seen[j] > 0 ? 100.0 * static_cast<double>(joint_hit[j]) / static_cast<double>(joint_seen[j]) : kNaN;
  }
  return report;
}

} // namespace posefuse
