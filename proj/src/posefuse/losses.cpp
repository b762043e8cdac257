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

#include "posefuse/losses.hpp"

#include "posefuse/error.hpp"

#include <cmath>

namespace posefuse {

void LossWeights::validate() const {
  PF_THROW_IF(!(beta > 0.0), ErrorKind::InvalidArgument, "beta must be positive, got {}", beta);
  PF_THROW_IF(!(lambda_reg >= 0.0), ErrorKind::InvalidArgument, "lambda_reg must be nonnegative");
  PF_THROW_IF(!(lambda_geo >= 0.0), ErrorKind::InvalidArgument, "lambda_geo must be nonnegative");
}

double loss_2d_heatmap(const Heatmap& pred, const Heatmap& target, std::span<const bool> visibility, Heatmap* grad) {
  PF_THROW_IF(
      pred.joints != target.joints || pred.height != target.height || pred.width != target.width,
      ErrorKind::InvalidArgument,
      "heatmap shape mismatch: {}x{}x{} vs {}x{}x{}",
      pred.joints,
      pred.height,
      pred.width,
      target.joints,
      target.height,
      target.width);
  PF_THROW_IF(
      visibility.size() != static_cast<size_t>(pred.joints),
      ErrorKind::InvalidArgument,
      "visibility has {} entries for {} planes",
      visibility.size(),
      pred.joints);
  if (grad) {
    *grad = Heatmap(pred.joints, pred.height, pred.width);
  }
  double total = 0.0;
  for (int j = 0; j < pred.joints; ++j) {
    if (!visibility[j]) {
      continue;
    }
    const auto p = pred.plane(j);
    const auto t = target.plane(j);
    double plane_sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
      const double d = p[i] - t[i];
      plane_sum += d * d;
    }
    total += plane_sum;
    if (grad) {
      auto g = grad->plane(j);
      for (size_t i = 0; i < p.size(); ++i) {
        g[i] = 2.0 * (p[i] - t[i]);
      }
    }
  }
  return total;
}

double loss_depth_smooth_l1(
    const DepthPrediction& pred,
    const DepthPrediction& target,
    const Visibility& visibility,
    double beta,
    DepthPrediction* grad) {
  PF_THROW_IF(!(beta > 0.0), ErrorKind::InvalidArgument, "beta must be positive, got {}", beta);
  int count = 0;
  for (bool v : visibility) {
    count += v ? 1 : 0;
  }
  if (grad) {
    grad->fill(0.0);
  }
  if (count == 0) {
    return 0.0;
  }
  double total = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    if (!visibility[j]) {
      continue;
    }
    const double d = pred[j] - target[j];
    const double ad = std::abs(d);
    double g;
    if (ad < beta) {
      total += 0.5 * d * d / beta;
      g = d / beta;
    } else {
      total += ad - 0.5 * beta;
      g = d > 0.0 ? 1.0 : -1.0;
    }
    if (grad) {
      (*grad)[j] = g / count;
    }
  }
  return total / count;
}

double loss_geometric(
    const Pose3D& pred,
    std::span<const BoneGroup> groups,
    std::array<Eigen::Vector3d, kNumJoints>* grad) {
  if (grad) {
    for (auto& g : *grad) {
      g.setZero();
    }
  }
  double total = 0.0;
  std::vector<double> ratios;
  std::vector<Eigen::Vector3d> deltas;
  std::vector<size_t> used;
  for (const BoneGroup& group : groups) {
    for (double len : group.canonical_lengths) {
      PF_THROW_IF(
          !(len > 0.0),
          ErrorKind::InvalidArgument,
          "bone group '{}' has a nonpositive canonical length",
          group.name);
    }
    ratios.clear();
    deltas.clear();
    used.clear();
    for (size_t e = 0; e < group.bones.size(); ++e) {
      const Bone b = group.bones[e];
      if (!pred.visible[b.parent] || !pred.visible[b.child]) {
        continue;
      }
      const Eigen::Vector3d delta = pred.coords[b.child] - pred.coords[b.parent];
      ratios.push_back(delta.norm() / group.canonical_lengths[e]);
      deltas.push_back(delta);
      used.push_back(e);
    }
    const size_t n = ratios.size();
    if (n < 2) {
      continue;
    }
    double mean = 0.0;
    for (double r : ratios) {
      mean += r;
    }
    mean /= static_cast<double>(n);
    double group_sum = 0.0;
    for (double r : ratios) {
      group_sum += (r - mean) * (r - mean);
    }
    total += group_sum / static_cast<double>(n);

    if (grad) {
      // d/dr_e of (1/n) sum (r - mean)^2 is (2/n)(r_e - mean): the mean's own
      // dependence cancels because deviations sum to zero.
      for (size_t k = 0; k < n; ++k) {
        const double len = deltas[k].norm();
        if (len == 0.0) {
          continue;
        }
        const double dr = 2.0 / static_cast<double>(n) * (ratios[k] - mean);
        const Bone b = group.bones[used[k]];
        const Eigen::Vector3d g = dr * deltas[k] / (len * group.canonical_lengths[used[k]]);
        (*grad)[b.child] += g;
        (*grad)[b.parent] -= g;
      }
    }
  }
  return total;
}

double loss_depth_combined(SampleSource source, const DepthTerms& terms, const LossWeights& weights) {
  return source == SampleSource::Set3D ? weights.lambda_reg * terms.dep_3d : weights.lambda_geo * terms.geo;
}

double loss_total(double l2d, double ldep) {
  PF_THROW_IF(
      !std::isfinite(l2d) || !std::isfinite(ldep),
      ErrorKind::Divergence,
      "non-finite loss (2d={}, depth={})",
      l2d,
      ldep);
  return l2d + ldep;
}

} // namespace posefuse
