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

#include "posefuse/dataset.hpp"
#include "posefuse/metrics.hpp"
#include "posefuse/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace posefuse {

enum class TrainMode { Fusion, ThreeDOnly };

std::string_view mode_name(TrainMode mode);
TrainMode parse_mode(std::string_view name);

struct TrainingConfig {
  StageTag stage = StageTag::S1;
  int epochs = 1;
  int batch_size = 1;
  double initial_lr = 1e-3;
  std::vector<int> lr_drop_epochs;
  double lr_drop_factor = 10.0;
  double lambda_reg = 0.0;
  double lambda_geo = 0.0;
  double beta = 1.0;
  int epoch_scale = 1;
  int validation_every = 5;
  uint64_t seed = 0;
  TrainMode mode = TrainMode::Fusion;

  void validate() const;
  nlohmann::json to_json() const;
  /// Overlays the fields present in `j` on `base`; unknown keys are rejected.
  static TrainingConfig from_json(const nlohmann::json& j, const TrainingConfig& base);
  /// FNV-1a of the canonical JSON form.
  uint64_t digest() const;
  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

TrainingConfig default_config(StageTag stage, TrainMode mode);

/// initial_lr divided by lr_drop_factor once for every drop epoch <= epoch.
double lr_at(const TrainingConfig& config, int epoch);

/// Multiplies epochs and every drop epoch by `factor`.
TrainingConfig scale_epochs(const TrainingConfig& config, int factor);

/// Validation runs after 0-based epoch e when (e + 1) is a multiple of
/// validation_every, and always after the last epoch.
bool is_validation_epoch(const TrainingConfig& config, int epoch);

struct FusionEpochPlan {
  std::vector<size_t> indices_2d;
  std::vector<size_t> indices_3d;
  /// Consumption order: 2D and 3D draws alternate.
  std::vector<std::pair<SampleSource, size_t>> order;
};

/// min(n_2d, n_3d) indices drawn without replacement from each source.
FusionEpochPlan plan_fusion_epoch(size_t n_2d, size_t n_3d, std::mt19937_64& rng);

struct MetricLogEntry {
  std::string stage;
  int epoch = 0;
  std::string split;  // "train" or "val"
  double pckh = 0.0;  // NaN when not measured
  double mpjpe = 0.0;
  double loss_2d = 0.0;
  double loss_dep = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
  double bone_ratio_variance = 0.0;

  nlohmann::json to_json() const;
};

/// Gradient bookkeeping used to check that each stage only trains what it should.
struct GradientRecord {
  size_t steps = 0;
  double depth_head_grad_max_abs = 0.0;   // largest |dL/dtheta| over depth-head parameters
  double geo_contribution_max_abs = 0.0;  // largest |lambda_geo * L_geo| of any 2D sample
  double geo_grad_max_abs = 0.0;          // largest |d(lambda_geo * L_geo)/dz|
  size_t geo_terms = 0;                   // 2D samples for which L_geo was evaluated

  nlohmann::json to_json() const;
};

struct StageData {
  const Dataset* data_2d = nullptr;
  const Dataset* data_3d = nullptr;
  const Dataset* val = nullptr;
};

struct StageResult {
  Checkpoint checkpoint;
  std::vector<MetricLogEntry> log;
  GradientRecord gradients;
  std::optional<EvalReport> final_validation;
};

using LogSink = std::function<void(const MetricLogEntry&)>;

/// Runs one stage on `network` in place. `previous` is the stage tag of the
/// checkpoint the network was resumed from (None for a fresh network).
StageResult run_stage(
    const TrainingConfig& config,
    Network& network,
    StageTag previous,
    const StageData& data,
    const LogSink& sink = {});

struct PipelineResult {
  std::vector<StageResult> stages;
  std::vector<MetricLogEntry> log;
};

/// Chains run_stage over configs in stage order, starting from a fresh network
/// seeded with the first config's seed.
PipelineResult train_pipeline(
    const std::vector<TrainingConfig>& configs,
    const NetworkSpec& spec,
    const StageData& data,
    const LogSink& sink = {});

} // namespace posefuse
