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

#include "fixtures.hpp"

#include "posefuse/dataset.hpp"
#include "posefuse/harmonize.hpp"
#include "posefuse/records.hpp"
#include "posefuse/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

using namespace posefuse;

TEST_SUITE("records") {

TEST_CASE("native layouts have the declared joint counts") {
  CHECK(native_joint_names(DatasetId::Mpii).size() == 16);
  CHECK(native_joint_names(DatasetId::Lsp).size() == 14);
  CHECK(native_joint_names(DatasetId::Flic).size() == 29);
  CHECK(native_joint_names(DatasetId::H36m).size() == 17);
  CHECK(native_joint_names(DatasetId::Mpii3d).size() == 28);
  CHECK(native_joint_names(DatasetId::Mpii3d, true).size() == 17);
  CHECK(native_joint_names(DatasetId::Op).size() == 15);
}

TEST_CASE("dataset and split names round trip") {
  for (DatasetId id : {DatasetId::Mpii, DatasetId::Lsp, DatasetId::Flic, DatasetId::H36m, DatasetId::Mpii3d, DatasetId::Op}) {
    CHECK(parse_dataset(dataset_name(id)) == id);
  }
  CHECK(fixtures::error_kind_of([] { parse_dataset("coco"); }) == ErrorKind::InvalidArgument);
  CHECK(parse_split("test") == Split::Test);
  CHECK_THROWS_AS(parse_split("dev"), Error);
}

TEST_CASE("record JSON round trip keeps NaN as null") {
  RawRecord r;
  r.dataset = DatasetId::Flic;
  r.image = "a.ppm";
  r.joints.push_back({"lsho", std::nan(""), 3.0, std::nullopt});
  r.joints.push_back({"lelb", 1.5, 2.5, std::nullopt});
  const auto j = record_to_json(r);
  CHECK(j["joints"][0]["x"].is_null());
  const RawRecord back = record_from_json(j);
  CHECK(std::isnan(back.joints[0].x));
  CHECK(back.joints[1].x == 1.5);
  CHECK(back.dataset == DatasetId::Flic);
}

TEST_CASE("sample JSON round trip is exact") {
  SynthParams params;
  fixtures::Rng rng(3);
  EmitOptions opts;
  opts.camera = params.camera.intrinsics(64);
  const HarmonizedSample s = harmonize_record(emit_source_format(generate_pose3d(params, rng), DatasetId::H36m, rng, opts));
  const HarmonizedSample back = sample_from_json(nlohmann::json::parse(sample_to_json(s).dump()));
  CHECK(sample_to_json(back).dump() == sample_to_json(s).dump());
  CHECK(back.scale == s.scale);
  CHECK((*back.depth)[3] == (*s.depth)[3]);
}

TEST_CASE("malformed JSON-lines report the line number") {
  const auto dir = fixtures::scratch_dir("records_bad");
  {
    std::ofstream f(dir / "r.jsonl");
    RawRecord r;
    r.dataset = DatasetId::Mpii;
    r.image = "x.ppm";
    for (auto n : native_joint_names(DatasetId::Mpii)) {
      r.joints.push_back({std::string(n), 1.0, 2.0, std::nullopt});
    }
    for (int i = 0; i < 6; ++i) {
      f << record_to_json(r).dump() << "\n";
    }
    f << "{not json\n";
  }
  try {
    read_records(dir / "r.jsonl");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find(":7:") != std::string::npos);
  }
}

} // TEST_SUITE

TEST_SUITE("dataset") {

TEST_CASE("load, split and partition a synthetic dataset") {
  const auto dir = fixtures::scratch_dir("dataset_load");
  SynthParams params;
  params.n_samples = 40;
  params.seed = 4;
  generate_dataset(params, DatasetId::H36m, Split::Test, dir, true);
  const Dataset d = load_dataset(dir);
  REQUIRE(d.size() == 40);
  CHECK(d.images[0].width == 64);

  const Dataset val = validation_split(d, 0.1, 7);
  CHECK(val.size() == 4);
  const Dataset again = validation_split(d, 0.1, 7);
  for (size_t i = 0; i < val.size(); ++i) {
    CHECK(val.samples[i].image == again.samples[i].image);
  }

  const HoldoutSplit h = holdout_split(d, 0.1, 7);
  CHECK(h.train.size() == 36);
  std::set<std::string> names;
  for (const auto& s : h.train.samples) {
    names.insert(s.image);
  }
  for (size_t i = 0; i < h.val.size(); ++i) {
    CHECK(h.val.samples[i].image == val.samples[i].image);
    CHECK(names.count(h.val.samples[i].image) == 0);
  }

  Dataset mixed = d;
  const auto dir2 = fixtures::scratch_dir("dataset_load_2d");
  params.n_samples = 10;
  generate_dataset(params, DatasetId::Mpii, Split::Train, dir2, true);
  mixed.append(load_dataset(dir2));
  const SourceSplit parts = split_by_source(mixed);
  CHECK(parts.set_2d.size() == 10);
  CHECK(parts.set_3d.size() == 40);

  CHECK(fixtures::error_kind_of([&] { load_dataset(dir / "nope"); }) == ErrorKind::Io);
  CHECK(fixtures::error_kind_of([&] { validation_split(Dataset{}, 0.1, 1); }) == ErrorKind::Precondition);
}

} // TEST_SUITE
