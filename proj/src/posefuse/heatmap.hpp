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

#include "posefuse/skeleton.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace posefuse {

/// J stacked probability planes, row-major: values[(j * height + v) * width + u].
struct Heatmap {
  int joints = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Heatmap() = default;
  Heatmap(int joints, int height, int width);

  size_t plane_size() const noexcept {
    return static_cast<size_t>(height) * width;
  }
  std::span<double> plane(int joint);
  std::span<const double> plane(int joint) const;
  double& at(int joint, int v, int u) {
    return values[(static_cast<size_t>(joint) * height + v) * width + u];
  }
  double at(int joint, int v, int u) const {
    return values[(static_cast<size_t>(joint) * height + v) * width + u];
  }
};

inline constexpr double kGaussianTruncation = 3.0;  // in units of sigma

/// Single-plane Gaussian label centred on `joint` (heatmap pixels), peak 1, zero
/// beyond 3 sigma. Invisible joints give an all-zero plane.
Heatmap render_gaussian_heatmap(const Eigen::Vector2d& joint, int height, int width, double sigma, bool visible = true);

/// All 16 planes for a pose already expressed in heatmap pixels.
Heatmap render_pose_heatmaps(const Pose2D& pose_in_heatmap_px, int height, int width, double sigma);

/// (x, y) of the maximum cell; ties resolve to the smallest row-major index.
Eigen::Vector2i decode_heatmap_argmax(const Heatmap& heatmap, int joint = 0);

/// Softmax-weighted expectation of cell coordinates (values / temperature).
Eigen::Vector2d decode_heatmap_soft(const Heatmap& heatmap, int joint, double temperature);

/// Gradient of `dot(grad_xy, decode_heatmap_soft(...))` with respect to the plane.
std::vector<double> decode_heatmap_soft_backward(
    const Heatmap& heatmap,
    int joint,
    double temperature,
    const Eigen::Vector2d& grad_xy);

} // namespace posefuse
