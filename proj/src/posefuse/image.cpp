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


#include "posefuse/image.hpp"

#include "posefuse/error.hpp"

#include <png.h>

#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace posefuse {

Image::Image(int width_, int height_)
    : width(width_), height(height_), rgb(static_cast<size_t>(width_) * height_ * 3, 0) {
  PF_THROW_IF(width_ <= 0 || height_ <= 0, ErrorKind::InvalidArgument, "image size must be positive");
}

std::vector<uint8_t> encode_ppm(const Image& image) {
  const std::string header = fmt::format("P6\n{} {}\n255\n", image.width, image.height);
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  PF_THROW_IF(!out, ErrorKind::Io, "cannot open {} for writing", path.string());
  const auto bytes = encode_ppm(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  PF_THROW_IF(!out, ErrorKind::Io, "failed writing {}", path.string());
}

void write_png(const Image& image, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  const int ok = png_image_write_to_file(&png, path.string().c_str(), 0, image.rgb.data(), 0, nullptr);
  PF_THROW_IF(!ok, ErrorKind::Io, "failed writing {}: {}", path.string(), png.message);
}

namespace {

Image parse_ppm(const std::vector<uint8_t>& bytes, const std::filesystem::path& path) {
  size_t pos = 2;
  auto next_int = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') {
          ++pos;
        }
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long value = 0;
    size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && digits < 9) {
      value = value * 10 + (bytes[pos] - '0');
      ++pos;
      ++digits;
    }
    PF_THROW_IF(digits == 0, ErrorKind::Parse, "{}: malformed PPM header", path.string());
    return value;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  PF_THROW_IF(maxval != 255, ErrorKind::Parse, "{}: only 8-bit PPM is supported", path.string());
  ++pos;  // single whitespace before the raster
  Image img(static_cast<int>(w), static_cast<int>(h));
  PF_THROW_IF(
      bytes.size() < pos + img.rgb.size(), ErrorKind::Parse, "{}: truncated PPM raster", path.string());
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.rgb.size(), img.rgb.begin());
  return img;
}

Image parse_png(const std::vector<uint8_t>& bytes, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  PF_THROW_IF(
      !png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()),
      ErrorKind::Parse,
      "{}: {}",
      path.string(),
      png.message);
  png.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&png);
    fail(ErrorKind::Parse, "{}: {}", path.string(), png.message);
  }
  return img;
}

} // namespace

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  PF_THROW_IF(!in, ErrorKind::Io, "cannot open image {}", path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return parse_ppm(bytes, path);
  }
  static constexpr std::array<uint8_t, 4> kPngMagic{0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
    return parse_png(bytes, path);
  }
  fail(ErrorKind::Parse, "{}: unsupported image format (expected P6 PPM or PNG)", path.string());
}

} // namespace posefuse
