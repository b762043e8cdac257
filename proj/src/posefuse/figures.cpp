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

#include "posefuse/figures.hpp"

#include "posefuse/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace posefuse {

namespace {

using Rgb = std::array<uint8_t, 3>;

constexpr Rgb kRight{220, 50, 47};
constexpr Rgb kLeft{38, 139, 210};
constexpr Rgb kTrunk{133, 153, 0};

// Bones of the right side start with "r_", left with "l_".
Rgb bone_color(int bone) {
  const std::string& name = canonical_skeleton().bone_names[bone];
  if (name.starts_with("r_")) {
    return kRight;
  }
  if (name.starts_with("l_")) {
    return kLeft;
  }
  return kTrunk;
}

std::string_view bone_hex(int bone) {
  const Rgb c = bone_color(bone);
  if (c == kRight) {
    return "#dc322f";
  }
  if (c == kLeft) {
    return "#268bd2";
  }
  return "#859900";
}

void stamp(Image& img, double cx, double cy, double radius, const Rgb& color) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + radius)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= radius * radius) {
        uint8_t* p = img.pixel(x, y);
        std::copy(color.begin(), color.end(), p);
      }
    }
  }
}

void line(Image& img, Eigen::Vector2d a, Eigen::Vector2d b, double radius, const Rgb& color) {
  const double len = (b - a).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
  for (int i = 0; i <= steps; ++i) {
    const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(i) / steps);
    stamp(img, p.x(), p.y(), radius, color);
  }
}

} // namespace

Image render_overlay(const Image& image, const Pose3D& prediction, int zoom) {
  PF_THROW_IF(zoom < 1, ErrorKind::InvalidArgument, "zoom must be at least 1, got {}", zoom);
  PF_THROW_IF(image.width < 1 || image.height < 1, ErrorKind::InvalidArgument, "empty image");
  Image out(image.width * zoom, image.height * zoom);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const uint8_t* src = image.pixel(x / zoom, y / zoom);
      std::copy(src, src + 3, out.pixel(x, y));
    }
  }
  const auto& sk = canonical_skeleton();
  auto at = [&](int j) { return Eigen::Vector2d(prediction.coords[j].x() * zoom, prediction.coords[j].y() * zoom); };
  for (int b = 0; b < kNumBones; ++b) {
    line(out, at(sk.bones[b].parent), at(sk.bones[b].child), 0.35 * zoom, bone_color(b));
  }
  for (int j = 0; j < kNumJoints; ++j) {
    stamp(out, at(j).x(), at(j).y(), 0.6 * zoom, {255, 255, 255});
  }
  return out;
}

std::string render_wireframe_svg(const Pose3D& prediction) {
  constexpr double kPanel = 240.0;
  constexpr double kMargin = 20.0;
  const Eigen::Vector3d root = prediction.coords[kRootJoint];
  std::array<Eigen::Vector3d, kNumJoints> p;
  double extent = 1e-9;
  for (int j = 0; j < kNumJoints; ++j) {
    p[j] = prediction.coords[j] - root;
    extent = std::max(extent, p[j].cwiseAbs().maxCoeff());
  }
  const double k = (kPanel / 2.0 - kMargin) / extent;

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n",
      2 * kPanel,
      kPanel + 20);
  const auto& sk = canonical_skeleton();
  // Panel 0 looks down the camera axis, panel 1 from the subject's left.
  for (int panel = 0; panel < 2; ++panel) {
    const double ox = panel * kPanel + kPanel / 2.0;
    const double oy = kPanel / 2.0;
    auto u = [&](int j) { return ox + k * (panel == 0 ? p[j].x() : p[j].z()); };
    auto v = [&](int j) { return oy + k * p[j].y(); };
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        ox,
        kPanel + 12.0,
        panel == 0 ? "front (x, y)" : "side (z, y)");
    for (int b = 0; b < kNumBones; ++b) {
      const int a = sk.bones[b].parent;
      const int c = sk.bones[b].child;
      svg += fmt::format(
          "<line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\" stroke=\"{}\" stroke-width=\"3\" "
          "stroke-linecap=\"round\"/>\n",
          u(a),
          v(a),
          u(c),
          v(c),
          bone_hex(b));
    }
    for (int j = 0; j < kNumJoints; ++j) {
      svg += fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"3\" fill=\"#073642\"/>\n", u(j), v(j));
    }
  }
  svg += "</svg>\n";
  return svg;
}

} // namespace posefuse
