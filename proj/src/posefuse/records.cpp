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

#include "posefuse/records.hpp"

#include "posefuse/error.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>

namespace posefuse {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 16> kMpiiNames = {
    "r_ankle",
    "r_knee",
    "r_hip",
    "l_hip",
    "l_knee",
    "l_ankle",
    "pelvis",
    "thorax",
    "upper_neck",
    "head_top",
    "r_wrist",
    "r_elbow",
    "r_shoulder",
    "l_shoulder",
    "l_elbow",
    "l_wrist"};

constexpr std::array<std::string_view, 14> kLspNames = {
    "r_ankle",
    "r_knee",
    "r_hip",
    "l_hip",
    "l_knee",
    "l_ankle",
    "r_wrist",
    "r_elbow",
    "r_shoulder",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "neck",
    "head_top"};

constexpr std::array<std::string_view, 29> kFlicNames = {
    "lsho",   "lelb",   "lwri",   "rsho",   "relb",   "rwri",   "lhip",   "lkne",
    "lank",   "rhip",   "rkne",   "rank",   "leye",   "reye",   "lear",   "rear",
    "nose",   "msho",   "mhip",   "mear",   "mtorso", "mluarm", "mruarm", "mllarm",
    "mrlarm", "mluleg", "mruleg", "mllleg", "mrlleg"};

constexpr std::array<std::string_view, 17> kH36mNames = {
    "hip",
    "r_hip",
    "r_knee",
    "r_foot",
    "l_hip",
    "l_knee",
    "l_foot",
    "spine",
    "thorax",
    "neck_nose",
    "head",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_shoulder",
    "r_elbow",
    "r_wrist"};

constexpr std::array<std::string_view, 28> kMpii3dTrainNames = {
    "spine3",         "spine4",         "spine2",      "spine",          "pelvis",      "neck",
    "head",           "head_top",       "left_clavicle", "left_shoulder", "left_elbow",  "left_wrist",
    "left_hand",      "right_clavicle", "right_shoulder", "right_elbow",  "right_wrist", "right_hand",
    "left_hip",       "left_knee",      "left_ankle",  "left_foot",      "left_toe",    "right_hip",
    "right_knee",     "right_ankle",    "right_foot",  "right_toe"};

constexpr std::array<std::string_view, 17> kMpii3dTestNames = {
    "head_top",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "pelvis",
    "spine",
    "head"};

constexpr std::array<std::string_view, 15> kOpNames = {
    "pelvis",
    "r_hip",
    "r_knee",
    "r_ankle",
    "l_hip",
    "l_knee",
    "l_ankle",
    "belly",
    "neck",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_shoulder",
    "r_elbow",
    "r_wrist"};

double coord_from_json(const json& v, std::string_view what) {
  if (v.is_null()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  PF_THROW_IF(!v.is_number(), ErrorKind::Parse, "{} must be a number or null", what);
  return v.get<double>();
}

json coord_to_json(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

const json& require_field(const json& doc, const char* key) {
  PF_THROW_IF(!doc.is_object(), ErrorKind::Parse, "expected a JSON object");
  auto it = doc.find(key);
  PF_THROW_IF(it == doc.end(), ErrorKind::Parse, "missing field '{}'", key);
  return *it;
}

template <typename T, typename Decode>
std::vector<T> read_jsonl(const std::filesystem::path& path, Decode&& decode) {
  std::ifstream in(path);
  PF_THROW_IF(!in, ErrorKind::Io, "cannot open '{}'", path.string());
  std::vector<T> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      out.push_back(decode(json::parse(line)));
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, "{}:{}: {}", path.string(), line_no, e.what());
    } catch (const Error& e) {
      fail(ErrorKind::Parse, "{}:{}: {}", path.string(), line_no, e.what());
    }
  }
  return out;
}

template <typename T, typename Encode>
void write_jsonl(const std::vector<T>& items, const std::filesystem::path& path, Encode&& encode) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  PF_THROW_IF(!out, ErrorKind::Io, "cannot write '{}'", path.string());
  for (const auto& item : items) {
    out << encode(item).dump() << '\n';
  }
  PF_THROW_IF(!out, ErrorKind::Io, "write to '{}' failed", path.string());
}

} // namespace

std::string_view dataset_name(DatasetId id) {
  switch (id) {
    case DatasetId::Mpii:
      return "mpii";
    case DatasetId::Lsp:
      return "lsp";
    case DatasetId::Flic:
      return "flic";
    case DatasetId::H36m:
      return "h36m";
    case DatasetId::Mpii3d:
      return "mpii3d";
    case DatasetId::Op:
      return "op";
  }
  return "unknown";
}

DatasetId parse_dataset(std::string_view name) {
  for (DatasetId id :
       {DatasetId::Mpii, DatasetId::Lsp, DatasetId::Flic, DatasetId::H36m, DatasetId::Mpii3d, DatasetId::Op}) {
    if (dataset_name(id) == name) {
      return id;
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown dataset '{}' (expected mpii, lsp, flic, h36m, mpii3d or op)", name);
}

bool is_3d_dataset(DatasetId id) {
  return id == DatasetId::H36m || id == DatasetId::Mpii3d || id == DatasetId::Op;
}

std::span<const std::string_view> native_joint_names(DatasetId id, bool mpii3d_test_layout) {
  switch (id) {
    case DatasetId::Mpii:
      return kMpiiNames;
    case DatasetId::Lsp:
      return kLspNames;
    case DatasetId::Flic:
      return kFlicNames;
    case DatasetId::H36m:
      return kH36mNames;
    case DatasetId::Mpii3d:
      return mpii3d_test_layout ? std::span<const std::string_view>(kMpii3dTestNames)
                                : std::span<const std::string_view>(kMpii3dTrainNames);
    case DatasetId::Op:
      return kOpNames;
  }
  return {};
}

std::string_view split_name(Split split) {
  return split == Split::Train ? "train" : "test";
}

Split parse_split(std::string_view name) {
  if (name == "train") {
    return Split::Train;
  }
  if (name == "test") {
    return Split::Test;
  }
  fail(ErrorKind::Parse, "unknown split '{}' (expected train or test)", name);
}

std::string_view source_name(SampleSource source) {
  return source == SampleSource::Set2D ? "2d" : "3d";
}

json record_to_json(const RawRecord& record) {
  json doc = json::object();
  doc["dataset"] = dataset_name(record.dataset);
  doc["split"] = split_name(record.split);
  doc["image"] = record.image;
  json joints = json::array();
  for (const auto& j : record.joints) {
    json e = json::object();
    e["name"] = j.name;
    e["x"] = coord_to_json(j.x);
    e["y"] = coord_to_json(j.y);
    if (j.z) {
      e["z"] = coord_to_json(*j.z);
    }
    joints.push_back(std::move(e));
  }
  doc["joints"] = std::move(joints);
  if (record.camera) {
    const Camera& c = *record.camera;
    json cam = {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}};
    if (c.width) {
      cam["width"] = *c.width;
    }
    if (c.height) {
      cam["height"] = *c.height;
    }
    doc["camera"] = std::move(cam);
  }
  return doc;
}

RawRecord record_from_json(const json& doc) {
  RawRecord r;
  r.dataset = parse_dataset(require_field(doc, "dataset").get<std::string>());
  r.split = doc.contains("split") ? parse_split(doc["split"].get<std::string>()) : Split::Train;
  r.image = doc.contains("image") ? doc["image"].get<std::string>() : std::string();
  const json& joints = require_field(doc, "joints");
  PF_THROW_IF(!joints.is_array(), ErrorKind::Parse, "'joints' must be an array");
  for (const json& e : joints) {
    NamedJoint j;
    j.name = require_field(e, "name").get<std::string>();
    j.x = coord_from_json(require_field(e, "x"), "joint x");
    j.y = coord_from_json(require_field(e, "y"), "joint y");
    if (e.contains("z")) {
      j.z = coord_from_json(e["z"], "joint z");
    }
    r.joints.push_back(std::move(j));
  }
  if (doc.contains("camera") && !doc["camera"].is_null()) {
    const json& c = doc["camera"];
    Camera cam;
    cam.fx = require_field(c, "fx").get<double>();
    cam.fy = require_field(c, "fy").get<double>();
    cam.cx = require_field(c, "cx").get<double>();
    cam.cy = require_field(c, "cy").get<double>();
    if (c.contains("width")) {
      cam.width = c["width"].get<int>();
    }
    if (c.contains("height")) {
      cam.height = c["height"].get<int>();
    }
    r.camera = cam;
  }
  return r;
}

json sample_to_json(const HarmonizedSample& s) {
  json doc = json::object();
  doc["dataset"] = dataset_name(s.dataset);
  doc["split"] = split_name(s.split);
  doc["source"] = source_name(s.source);
  doc["image"] = s.image;
  json p2 = json::array();
  for (int j = 0; j < kNumJoints; ++j) {
    p2.push_back(json::array({s.pose2d.coords[j].x(), s.pose2d.coords[j].y(), s.pose2d.visible[j] ? 1 : 0}));
  }
  doc["pose2d"] = std::move(p2);
  if (s.pose3d) {
    json p3 = json::array();
    for (int j = 0; j < kNumJoints; ++j) {
      const auto& c = s.pose3d->coords[j];
      p3.push_back(json::array({c.x(), c.y(), c.z()}));
    }
    doc["pose3d"] = std::move(p3);
  }
  if (s.depth) {
    doc["depth"] = *s.depth;
  }
  if (s.source == SampleSource::Set3D) {
    doc["scale"] = s.scale;
  }
  if (s.excluded) {
    doc["excluded"] = true;
  }
  if (s.negative_scale) {
    doc["flags"] = json::array({"negative_scale"});
  }
  return doc;
}

HarmonizedSample sample_from_json(const json& doc) {
  HarmonizedSample s;
  s.dataset = doc.contains("dataset") ? parse_dataset(doc["dataset"].get<std::string>()) : DatasetId::Mpii;
  s.split = doc.contains("split") ? parse_split(doc["split"].get<std::string>()) : Split::Train;
  const auto source = require_field(doc, "source").get<std::string>();
  PF_THROW_IF(source != "2d" && source != "3d", ErrorKind::Parse, "unknown source '{}'", source);
  s.source = source == "2d" ? SampleSource::Set2D : SampleSource::Set3D;
  s.image = doc.contains("image") ? doc["image"].get<std::string>() : std::string();
  const json& p2 = require_field(doc, "pose2d");
  PF_THROW_IF(
      !p2.is_array() || p2.size() != kNumJoints,
      ErrorKind::Parse,
      "pose2d must hold {} joints, got {}",
      kNumJoints,
      p2.is_array() ? p2.size() : 0);
  for (int j = 0; j < kNumJoints; ++j) {
    const json& e = p2[j];
    PF_THROW_IF(!e.is_array() || e.size() != 3, ErrorKind::Parse, "pose2d entries are [x, y, vis]");
    s.pose2d.coords[j] = {e[0].get<double>(), e[1].get<double>()};
    s.pose2d.visible[j] = e[2].get<double>() != 0.0;
  }
  if (doc.contains("pose3d")) {
    const json& p3 = doc["pose3d"];
    PF_THROW_IF(
        !p3.is_array() || p3.size() != kNumJoints,
        ErrorKind::Parse,
        "pose3d must hold {} joints",
        kNumJoints);
    Pose3D pose;
    pose.frame = Frame::RootAlignedMm;
    pose.visible = s.pose2d.visible;
    for (int j = 0; j < kNumJoints; ++j) {
      PF_THROW_IF(!p3[j].is_array() || p3[j].size() != 3, ErrorKind::Parse, "pose3d entries are [x, y, z]");
      pose.coords[j] = {p3[j][0].get<double>(), p3[j][1].get<double>(), p3[j][2].get<double>()};
    }
    s.pose3d = pose;
  }
  if (doc.contains("depth")) {
    const json& d = doc["depth"];
    PF_THROW_IF(!d.is_array() || d.size() != kNumJoints, ErrorKind::Parse, "depth must hold {} values", kNumJoints);
    std::array<double, kNumJoints> depth{};
    for (int j = 0; j < kNumJoints; ++j) {
      depth[j] = d[j].get<double>();
    }
    s.depth = depth;
  }
  s.scale = doc.value("scale", 0.0);
  s.excluded = doc.value("excluded", false);
  if (doc.contains("flags")) {
    for (const auto& f : doc["flags"]) {
      if (f == "negative_scale") {
        s.negative_scale = true;
      }
    }
  }
  PF_THROW_IF(
      (s.source == SampleSource::Set3D) != (s.pose3d.has_value() && s.depth.has_value()),
      ErrorKind::Parse,
      "3D samples carry pose3d and depth; 2D samples carry neither");
  return s;
}

std::vector<RawRecord> read_records(const std::filesystem::path& path) {
  return read_jsonl<RawRecord>(path, [](const json& doc) { return record_from_json(doc); });
}

std::vector<HarmonizedSample> read_samples(const std::filesystem::path& path) {
  return read_jsonl<HarmonizedSample>(path, [](const json& doc) { return sample_from_json(doc); });
}

void write_records(const std::vector<RawRecord>& records, const std::filesystem::path& path) {
  write_jsonl(records, path, [](const RawRecord& r) { return record_to_json(r); });
}

void write_samples(const std::vector<HarmonizedSample>& samples, const std::filesystem::path& path) {
  write_jsonl(samples, path, [](const HarmonizedSample& s) { return sample_to_json(s); });
}

} // namespace posefuse
