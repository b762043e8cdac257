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

#include "posefuse/posefuse.h"

#include "posefuse/dataset.hpp"
#include "posefuse/error.hpp"
#include "posefuse/figures.hpp"
#include "posefuse/harmonize.hpp"
#include "posefuse/metrics.hpp"
#include "posefuse/model.hpp"
#include "posefuse/synth.hpp"
#include "posefuse/trainer.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <optional>
#include <string>
#include <vector>

#ifndef POSEFUSE_VERSION
#define POSEFUSE_VERSION "0.0.0"
#endif

struct pf_config {
  posefuse::TrainingConfig training;
  posefuse::NetworkSpec network = posefuse::NetworkSpec::desk();
};

struct pf_checkpoint {
  posefuse::Checkpoint checkpoint;
};

namespace {

using namespace posefuse;

thread_local std::string g_last_error;

pf_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return PF_ERR_INVALID_ARGUMENT;
    case ErrorKind::Parse:
      return PF_ERR_PARSE;
    case ErrorKind::Precondition:
      return PF_ERR_PRECONDITION;
    case ErrorKind::Divergence:
      return PF_ERR_DIVERGENCE;
    case ErrorKind::Io:
      return PF_ERR_IO;
    case ErrorKind::Incompatible:
      return PF_ERR_INCOMPATIBLE;
  }
  return PF_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into a status and the thread's last error.
template <typename F>
pf_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return PF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return PF_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  PF_THROW_IF(p == nullptr, ErrorKind::InvalidArgument, "{} must not be null", what);
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) {
    throw std::bad_alloc();
  }
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json read_json_file(const char* path) {
  std::ifstream in(path);
  PF_THROW_IF(!in, ErrorKind::Io, "cannot open {}", path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, "{}: {}", path, e.what());
  }
}

} // namespace

extern "C" {

const char* pf_version(void) {
  return POSEFUSE_VERSION;
}

const char* pf_last_error(void) {
  return g_last_error.c_str();
}

const char* pf_status_name(pf_status status) {
  switch (status) {
    case PF_OK:
      return "ok";
    case PF_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case PF_ERR_PARSE:
      return "parse error";
    case PF_ERR_PRECONDITION:
      return "precondition failed";
    case PF_ERR_DIVERGENCE:
      return "divergence";
    case PF_ERR_IO:
      return "i/o error";
    case PF_ERR_INCOMPATIBLE:
      return "incompatible";
    case PF_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

void pf_string_free(char* s) {
  std::free(s);
}

pf_status pf_convert(const char* input_path, const char* dataset, const char* output_path, pf_convert_summary* summary) {
  return guarded([&] {
    require(input_path, "input path");
    require(output_path, "output path");
    const bool check_dataset = dataset != nullptr;
    const DatasetId expected = check_dataset ? parse_dataset(dataset) : DatasetId::Mpii;
    const std::vector<RawRecord> records = read_records(input_path);
    HarmonizeStats stats;
    pf_convert_summary out{};
    std::vector<HarmonizedSample> samples;
    samples.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
      PF_THROW_IF(
          check_dataset && records[i].dataset != expected,
          ErrorKind::InvalidArgument,
          "{}: record {} is {} but --dataset is {}",
          input_path,
          i + 1,
          dataset_name(records[i].dataset),
          dataset_name(expected));
      samples.push_back(harmonize_record(records[i], std::nullopt, &stats));
      out.excluded += samples.back().excluded ? 1 : 0;
    }
    write_samples(samples, output_path);
    out.converted = samples.size();
    out.nan_substituted = stats.nan_substituted;
    if (summary) {
      *summary = out;
    }
  });
}

void pf_synth_options_init(pf_synth_options* options) {
  if (options == nullptr) {
    return;
  }
  options->seed = 0;
  options->n_samples = 100;
  options->image_size = 64;
  options->dataset = "mpii";
  options->split = "train";
  options->harmonize = 1;
}

pf_status pf_synth(const pf_synth_options* options, const char* out_dir, pf_synth_summary* summary) {
  return guarded([&] {
    require(options, "options");
    require(out_dir, "output directory");
    SynthParams params;
    params.seed = options->seed;
    params.n_samples = options->n_samples;
    params.image_size = options->image_size;
    // The default camera frames a 64 px image; keep the same field of view.
    const double zoom = options->image_size / 64.0;
    params.camera.fx *= zoom;
    params.camera.fy *= zoom;
    params.camera.cx = params.camera.cy = options->image_size / 2.0;
    const SynthDatasetSummary s = generate_dataset(
        params,
        parse_dataset(options->dataset ? options->dataset : "mpii"),
        parse_split(options->split ? options->split : "train"),
        out_dir,
        options->harmonize != 0);
    if (summary) {
      *summary = pf_synth_summary{s.records, s.samples, s.excluded};
    }
  });
}

pf_status pf_config_default(const char* stage, const char* mode, pf_config** out) {
  return guarded([&] {
    require(stage, "stage");
    require(out, "output handle");
    *out = nullptr;
    auto cfg = std::make_unique<pf_config>();
    cfg->training = default_config(parse_stage(stage), parse_mode(mode ? mode : "fusion"));
    *out = cfg.release();
  });
}

pf_status pf_config_load(pf_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "config path");
    nlohmann::json doc = read_json_file(path);
    PF_THROW_IF(!doc.is_object(), ErrorKind::Parse, "{}: config must be a JSON object", path);
    NetworkSpec network = config->network;
    if (doc.contains("network")) {
      network = NetworkSpec::from_json(doc.at("network"));
      doc.erase("network");
    }
    TrainingConfig training = TrainingConfig::from_json(doc, config->training);
    training.validate();
    config->training = training;
    config->network = network;
  });
}

pf_status pf_config_set_seed(pf_config* config, uint64_t seed) {
  return guarded([&] {
    require(config, "config");
    config->training.seed = seed;
  });
}

pf_status pf_config_scale_epochs(pf_config* config, int factor) {
  return guarded([&] {
    require(config, "config");
    config->training = scale_epochs(config->training, factor);
  });
}

pf_status pf_config_to_json(const pf_config* config, char** json) {
  return guarded([&] {
    require(config, "config");
    require(json, "output string");
    nlohmann::json doc = config->training.to_json();
    doc["network"] = config->network.to_json();
    *json = duplicate(doc.dump(2));
  });
}

void pf_config_free(pf_config* config) {
  delete config;
}

pf_status pf_checkpoint_load(const char* path, pf_checkpoint** out) {
  return guarded([&] {
    require(path, "checkpoint path");
    require(out, "output handle");
    *out = nullptr;
    auto ck = std::make_unique<pf_checkpoint>();
    ck->checkpoint = load_checkpoint(path);
    *out = ck.release();
  });
}

pf_status pf_checkpoint_save(const pf_checkpoint* checkpoint, const char* path) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(path, "checkpoint path");
    save_checkpoint(checkpoint->checkpoint, path);
  });
}

const char* pf_checkpoint_stage(const pf_checkpoint* checkpoint) {
  // stage_name returns views of string literals, so data() is terminated.
  return checkpoint ? stage_name(checkpoint->checkpoint.stage_completed).data() : "none";
}

pf_status pf_checkpoint_metrics_json(const pf_checkpoint* checkpoint, char** json) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(json, "output string");
    *json = duplicate(checkpoint->checkpoint.metrics.dump(2));
  });
}

void pf_checkpoint_free(pf_checkpoint* checkpoint) {
  delete checkpoint;
}

pf_status pf_train_stage(const pf_config* config, const pf_train_inputs* inputs, pf_checkpoint** out) {
  return guarded([&] {
    require(config, "config");
    require(inputs, "inputs");
    require(out, "output handle");
    *out = nullptr;
    PF_THROW_IF(inputs->n_data_paths == 0, ErrorKind::InvalidArgument, "at least one training data path is required");
    require(inputs->data_paths, "data paths");

    Dataset all;
    for (size_t i = 0; i < inputs->n_data_paths; ++i) {
      require(inputs->data_paths[i], "data path");
      all.append(load_dataset(inputs->data_paths[i]));
    }
    Dataset train;
    Dataset val;
    if (inputs->val_path) {
      train = std::move(all);
      val = load_dataset(inputs->val_path);
    } else {
      HoldoutSplit split = holdout_split(all, 0.1, config->training.seed);
      train = std::move(split.train);
      val = std::move(split.val);
    }
    const SourceSplit sources = split_by_source(train);

    std::optional<Network> network;
    StageTag previous = StageTag::None;
    if (inputs->resume) {
      network.emplace(network_from_checkpoint(inputs->resume->checkpoint));
      previous = inputs->resume->checkpoint.stage_completed;
    } else {
      network.emplace(config->network, config->training.seed);
    }

    // Opened on the first entry so a stage that fails its checks leaves no file.
    std::ofstream log;
    const LogSink sink = [&](const MetricLogEntry& e) {
      const std::string line = e.to_json().dump();
      if (inputs->log_path) {
        if (!log.is_open()) {
          log.open(inputs->log_path, std::ios::trunc);
          PF_THROW_IF(!log, ErrorKind::Io, "cannot write {}", inputs->log_path);
        }
        log << line << '\n';
        log.flush();
      }
      if (inputs->log_fn) {
        inputs->log_fn(line.c_str(), inputs->log_user);
      }
    };

    const StageData data{&sources.set_2d, &sources.set_3d, &val};
    StageResult result = run_stage(config->training, *network, previous, data, sink);
    PF_THROW_IF(log.is_open() && !log, ErrorKind::Io, "failed writing {}", inputs->log_path);
    auto ck = std::make_unique<pf_checkpoint>();
    ck->checkpoint = std::move(result.checkpoint);
    *out = ck.release();
  });
}

pf_status pf_evaluate(
    const pf_checkpoint* checkpoint,
    const char* data_path,
    const char* decode,
    int per_joint,
    char** report_json,
    char** report_table) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(data_path, "data path");
    const Network network = network_from_checkpoint(checkpoint->checkpoint);
    const Dataset data = load_dataset(data_path);
    const int size = network.spec().input_size;
    for (size_t i = 0; i < data.size(); ++i) {
      PF_THROW_IF(
          data.images[i].width != size || data.images[i].height != size,
          ErrorKind::Incompatible,
          "sample {} image is {}x{} but the checkpoint expects {}x{}",
          i + 1,
          data.images[i].width,
          data.images[i].height,
          size,
          size);
    }
    const EvalReport report = evaluate(network, data, parse_decode(decode ? decode : "argmax"));
    if (report_json) {
      *report_json = duplicate(report.to_json().dump(2));
    }
    if (report_table) {
      *report_table = duplicate(report.to_table(per_joint != 0));
    }
  });
}

pf_status pf_render(
    const pf_checkpoint* checkpoint,
    const char* image_path,
    const char* overlay_png_path,
    const char* wireframe_svg_path) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(image_path, "image path");
    require(overlay_png_path, "overlay path");
    require(wireframe_svg_path, "wireframe path");
    const Network network = network_from_checkpoint(checkpoint->checkpoint);
    const Image image = read_image(image_path);
    const Pose3D pred = predict_pose3d(network, image, Decode::Argmax);
    write_png(render_overlay(image, pred), overlay_png_path);
    std::ofstream svg(wireframe_svg_path, std::ios::binary | std::ios::trunc);
    PF_THROW_IF(!svg, ErrorKind::Io, "cannot write {}", wireframe_svg_path);
    svg << render_wireframe_svg(pred);
    PF_THROW_IF(!svg, ErrorKind::Io, "failed writing {}", wireframe_svg_path);
  });
}

} // extern "C"
