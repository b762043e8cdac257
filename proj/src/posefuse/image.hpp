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

#include <cstdint>
#include <filesystem>
#include <vector>

namespace posefuse {

/// 8-bit interleaved RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;

  Image() = default;
  Image(int width, int height);

  uint8_t* pixel(int x, int y) {
    return rgb.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  const uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
};

std::vector<uint8_t> encode_ppm(const Image& image);
void write_ppm(const Image& image, const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

/// Reads binary PPM (P6, maxval 255) or PNG, chosen by the file signature.
Image read_image(const std::filesystem::path& path);

} // namespace posefuse
