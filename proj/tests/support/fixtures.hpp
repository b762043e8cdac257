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

#include "oracles.hpp"

#include "posefuse/error.hpp"
#include "posefuse/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

namespace fixtures {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline posefuse::Pose2D random_pose2d(Rng& rng, double extent = 64.0, double p_hidden = 0.0) {
  posefuse::Pose2D p;
  for (int j = 0; j < posefuse::kNumJoints; ++j) {
    p.coords[j] = {uniform(rng, 0.0, extent), uniform(rng, 0.0, extent)};
    p.visible[j] = uniform(rng, 0.0, 1.0) >= p_hidden;
    if (!p.visible[j]) {
      p.hide(j);
    }
  }
  return p;
}

inline posefuse::Pose3D random_pose3d(Rng& rng, double extent = 500.0, posefuse::Frame frame = posefuse::Frame::RootAlignedMm) {
  posefuse::Pose3D p;
  p.frame = frame;
  for (auto& c : p.coords) {
    c = {uniform(rng, -extent, extent), uniform(rng, -extent, extent), uniform(rng, -extent, extent)};
  }
  return p;
}

inline oracle::P2 to_oracle(const posefuse::Pose2D& p) {
  oracle::P2 o{};
  for (int j = 0; j < oracle::J; ++j) {
    o.xy[j][0] = p.coords[j].x();
    o.xy[j][1] = p.coords[j].y();
    o.vis[j] = p.visible[j];
  }
  return o;
}

inline oracle::P3 to_oracle(const posefuse::Pose3D& p) {
  oracle::P3 o{};
  for (int j = 0; j < oracle::J; ++j) {
    for (int k = 0; k < 3; ++k) {
      o.xyz[j][k] = p.coords[j][k];
    }
    o.vis[j] = p.visible[j];
  }
  return o;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("posefuse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <typename F>
posefuse::ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const posefuse::Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected a posefuse::Error");
}

} // namespace fixtures
