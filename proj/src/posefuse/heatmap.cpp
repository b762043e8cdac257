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

#include "posefuse/heatmap.hpp"

#include "posefuse/error.hpp"

#include <algorithm>
#include <cmath>

namespace posefuse {

Heatmap::Heatmap(int joints_, int height_, int width_)
    : joints(joints_), height(height_), width(width_), values(static_cast<size_t>(joints_) * height_ * width_, 0.0) {
  PF_THROW_IF(
      joints_ <= 0 || height_ <= 0 || width_ <= 0,
      ErrorKind::InvalidArgument,
      "heatmap dimensions must be positive ({}x{}x{})",
      joints_,
      height_,
      width_);
}

std::span<double> Heatmap::plane(int joint) {
  return {values.data() + static_cast<size_t>(joint) * plane_size(), plane_size()};
}

std::span<const double> Heatmap::plane(int joint) const {
  return {values.data() + static_cast<size_t>(joint) * plane_size(), plane_size()};
}

namespace {

void splat_gaussian(std::span<double> plane, int height, int width, const Eigen::Vector2d& joint, double sigma) {
  const double cutoff_sq = kGaussianTruncation * kGaussianTruncation * sigma * sigma;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  // Only cells inside the truncation radius can be nonzero.
  const double r = kGaussianTruncation * sigma;
  const int u0 = std::max(0, static_cast<int>(std::floor(joint.x() - r)));
  const int u1 = std::min(width - 1, static_cast<int>(std::ceil(joint.x() + r)));
  const int v0 = std::max(0, static_cast<int>(std::floor(joint.y() - r)));
  const int v1 = std::min(height - 1, static_cast<int>(std::ceil(joint.y() + r)));
  for (int v = v0; v <= v1; ++v) {
    const double dy = v - joint.y();
    for (int u = u0; u <= u1; ++u) {
      const double dx = u - joint.x();
      const double d2 = dx * dx + dy * dy;
      if (d2 <= cutoff_sq) {
        plane[static_cast<size_t>(v) * width + u] = std::exp(-d2 * inv_two_var);
      }
    }
  }
}

} // namespace

Heatmap render_gaussian_heatmap(const Eigen::Vector2d& joint, int height, int width, double sigma, bool visible) {
  PF_THROW_IF(!(sigma > 0.0), ErrorKind::InvalidArgument, "sigma must be positive, got {}", sigma);
  Heatmap hm(1, height, width);
  if (visible && joint.allFinite()) {
    splat_gaussian(hm.plane(0), height, width, joint, sigma);
  }
  return hm;
}

Heatmap render_pose_heatmaps(const Pose2D& pose, int height, int width, double sigma) {
  PF_THROW_IF(!(sigma > 0.0), ErrorKind::InvalidArgument, "sigma must be positive, got {}", sigma);
  Heatmap hm(kNumJoints, height, width);
  for (int j = 0; j < kNumJoints; ++j) {
    if (pose.visible[j]) {
      splat_gaussian(hm.plane(j), height, width, pose.coords[j], sigma);
    }
  }
  return hm;
}

Eigen::Vector2i decode_heatmap_argmax(const Heatmap& heatmap, int joint) {
  PF_THROW_IF(
      joint < 0 || joint >= heatmap.joints || heatmap.plane_size() == 0,
      ErrorKind::InvalidArgument,
      "joint plane {} out of range",
      joint);
  const auto plane = heatmap.plane(joint);
  size_t best = 0;
  for (size_t i = 1; i < plane.size(); ++i) {
    if (plane[i] > plane[best]) {
      best = i;
    }
  }
  return {static_cast<int>(best % heatmap.width), static_cast<int>(best / heatmap.width)};
}

namespace {

// Softmax weights of plane / temperature, max-shifted.
std::vector<double> softmax_weights(std::span<const double> plane, double temperature) {
  const double peak = *std::max_element(plane.begin(), plane.end());
  std::vector<double> w(plane.size());
  double total = 0.0;
  for (size_t i = 0; i < plane.size(); ++i) {
    w[i] = std::exp((plane[i] - peak) / temperature);
    total += w[i];
  }
  for (double& x : w) {
    x /= total;
  }
  return w;
}

} // namespace

Eigen::Vector2d decode_heatmap_soft(const Heatmap& heatmap, int joint, double temperature) {
  PF_THROW_IF(!(temperature > 0.0), ErrorKind::InvalidArgument, "temperature must be positive");
  PF_THROW_IF(joint < 0 || joint >= heatmap.joints, ErrorKind::InvalidArgument, "joint plane {} out of range", joint);
  const auto w = softmax_weights(heatmap.plane(joint), temperature);
  double x = 0.0;
  double y = 0.0;
  for (int v = 0; v < heatmap.height; ++v) {
    double row = 0.0;
    for (int u = 0; u < heatmap.width; ++u) {
      const double p = w[static_cast<size_t>(v) * heatmap.width + u];
      x += p * u;
      row += p;
    }
    y += row * v;
  }
  return {x, y};
}

std::vector<double> decode_heatmap_soft_backward(
    const Heatmap& heatmap,
    int joint,
    double temperature,
    const Eigen::Vector2d& grad_xy) {
  const auto w = softmax_weights(heatmap.plane(joint), temperature);
  const Eigen::Vector2d mean = decode_heatmap_soft(heatmap, joint, temperature);
  std::vector<double> grad(w.size());
  for (int v = 0; v < heatmap.height; ++v) {
    for (int u = 0; u < heatmap.width; ++u) {
      const size_t i = static_cast<size_t>(v) * heatmap.width + u;
      // d mean / d value_i = p_i * (cell_i - mean) / T
      grad[i] = w[i] * (grad_xy.x() * (u - mean.x()) + grad_xy.y() * (v - mean.y())) / temperature;
    }
  }
  return grad;
}

} // namespace posefuse
