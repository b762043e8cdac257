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

// Source-format annotation records, harmonized samples and their JSON-lines encoding.

#include "posefuse/skeleton.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace posefuse {

enum class DatasetId { Mpii, Lsp, Flic, H36m, Mpii3d, Op };

std::string_view dataset_name(DatasetId id);
DatasetId parse_dataset(std::string_view name);
bool is_3d_dataset(DatasetId id);

/// Native joint names of a source format. MPII3D has two layouts (28 train, 17 test).
std::span<const std::string_view> native_joint_names(DatasetId id, bool mpii3d_test_layout = false);

enum class Split { Train, Test };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  // When set, projected joints outside [0, width) x [0, height) become invisible.
  std::optional<int> width;
  std::optional<int> height;
};

struct NamedJoint {
  std::string name;
  double x = 0.0;
  double y = 0.0;
  std::optional<double> z;  // present for 3D formats
};

struct RawRecord {
  DatasetId dataset = DatasetId::Mpii;
  Split split = Split::Train;
  std::string image;
  std::vector<NamedJoint> joints;  // NaN marks a missing annotation
  std::optional<Camera> camera;
};

enum class SampleSource { Set2D, Set3D };

std::string_view source_name(SampleSource source);

struct HarmonizedSample {
  DatasetId dataset = DatasetId::Mpii;
  Split split = Split::Train;
  SampleSource source = SampleSource::Set2D;
  std::string image;
  Pose2D pose2d;
  std::optional<Pose3D> pose3d;                       // root-aligned mm
  std::optional<std::array<double, kNumJoints>> depth; // image-scaled z
  double scale = 0.0;                                 // pixels per mm, 3D samples only
  bool excluded = false;                              // degenerate depth scale
  bool negative_scale = false;
};

nlohmann::json record_to_json(const RawRecord& record);
RawRecord record_from_json(const nlohmann::json& doc);

nlohmann::json sample_to_json(const HarmonizedSample& sample);
HarmonizedSample sample_from_json(const nlohmann::json& doc);

/// Reads a JSON-lines file. Blank lines are skipped; a malformed line raises a Parse
/// error naming its 1-based line number.
std::vector<RawRecord> read_records(const std::filesystem::path& path);
std::vector<HarmonizedSample> read_samples(const std::filesystem::path& path);

void write_records(const std::vector<RawRecord>& records, const std::filesystem::path& path);
void write_samples(const std::vector<HarmonizedSample>& samples, const std::filesystem::path& path);

} // namespace posefuse
