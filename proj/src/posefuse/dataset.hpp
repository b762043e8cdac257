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

#include "posefuse/image.hpp"
#include "posefuse/records.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace posefuse {

/// Harmonized samples with their images decoded in memory.
struct Dataset {
  std::vector<HarmonizedSample> samples;
  std::vector<Image> images;  // parallel to samples

  size_t size() const noexcept {
    return samples.size();
  }
  void append(const Dataset& other);
  Dataset subset(const std::vector<size_t>& indices) const;
};

/// Loads `samples.jsonl` from a directory, or the given JSON-lines file. Image
/// paths are resolved relative to the file's directory.
Dataset load_dataset(const std::filesystem::path& path);

/// The first `fraction` of a seeded shuffle (at least one sample).
Dataset validation_split(const Dataset& data, double fraction, uint64_t seed);

struct HoldoutSplit {
  Dataset train;
  Dataset val;  // exactly validation_split(data, fraction, seed)
};

/// Partitions `data` into the validation_split samples and the rest; the
/// training part keeps its original order.
HoldoutSplit holdout_split(const Dataset& data, double fraction, uint64_t seed);

struct SourceSplit {
  Dataset set_2d;
  Dataset set_3d;
};

/// Separates samples by their training source.
SourceSplit split_by_source(const Dataset& data);

} // namespace posefuse
