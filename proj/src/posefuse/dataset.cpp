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


#include "posefuse/dataset.hpp"

#include "posefuse/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace posefuse {

void Dataset::append(const Dataset& other) {
  samples.insert(samples.end(), other.samples.begin(), other.samples.end());
  images.insert(images.end(), other.images.begin(), other.images.end());
}

Dataset Dataset::subset(const std::vector<size_t>& indices) const {
  Dataset out;
  out.samples.reserve(indices.size());
  out.images.reserve(indices.size());
  for (size_t i : indices) {
    PF_THROW_IF(i >= samples.size(), ErrorKind::InvalidArgument, "sample index {} out of range", i);
    out.samples.push_back(samples[i]);
    out.images.push_back(images[i]);
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(path)) {
    file = path / "samples.jsonl";
  }
  PF_THROW_IF(
      !std::filesystem::exists(file),
      ErrorKind::Io,
      "no harmonized samples at {} (run convert, or synth --harmonize)",
      file.string());
  Dataset d;
  d.samples = read_samples(file);
  const auto root = file.parent_path();
  d.images.reserve(d.samples.size());
  for (const auto& s : d.samples) {
    std::filesystem::path img = s.image;
    d.images.push_back(read_image(img.is_absolute() ? img : root / img));
  }
  return d;
}

namespace {

std::vector<size_t> validation_indices(const Dataset& data, double fraction, uint64_t seed) {
  PF_THROW_IF(data.size() == 0, ErrorKind::Precondition, "cannot split an empty dataset");
  PF_THROW_IF(
      !(fraction > 0.0 && fraction <= 1.0), ErrorKind::InvalidArgument, "fraction must lie in (0, 1]");
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = std::max<size_t>(1, static_cast<size_t>(std::floor(fraction * static_cast<double>(data.size()))));
  order.resize(n);
  return order;
}

} // namespace

Dataset validation_split(const Dataset& data, double fraction, uint64_t seed) {
  return data.subset(validation_indices(data, fraction, seed));
}

HoldoutSplit holdout_split(const Dataset& data, double fraction, uint64_t seed) {
  const std::vector<size_t> val = validation_indices(data, fraction, seed);
  std::vector<bool> is_val(data.size(), false);
  for (size_t i : val) {
    is_val[i] = true;
  }
  std::vector<size_t> train;
  for (size_t i = 0; i < data.size(); ++i) {
    if (!is_val[i]) {
      train.push_back(i);
    }
  }
  return {data.subset(train), data.subset(val)};
}

SourceSplit split_by_source(const Dataset& data) {
  std::vector<size_t> a;
  std::vector<size_t> b;
  for (size_t i = 0; i < data.size(); ++i) {
    (data.samples[i].source == SampleSource::Set2D ? a : b).push_back(i);
  }
  return {data.subset(a), data.subset(b)};
}

} // namespace posefuse
