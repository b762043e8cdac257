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

// Figures of a predicted pose: a 2D overlay raster and a 3D wireframe SVG.

#include "posefuse/image.hpp"
#include "posefuse/skeleton.hpp"

#include <string>

namespace posefuse {

/// Nearest-neighbour upscale of `image` by `zoom` with the predicted skeleton
/// drawn on top. Right limbs are red, left limbs blue, the trunk green.
Image render_overlay(const Image& image, const Pose3D& prediction, int zoom = 4);

/// Two orthographic panels of the root-aligned prediction: front (x, y) and
/// side (z, y). Output is byte-for-byte deterministic.
std::string render_wireframe_svg(const Pose3D& prediction);

} // namespace posefuse
