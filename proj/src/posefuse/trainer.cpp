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

#include "posefuse/trainer.hpp"

#include "posefuse/error.hpp"
#include "posefuse/hash.hpp"
#include "posefuse/losses.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace posefuse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr Decode kValidationDecode = Decode::Argmax;

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

} // namespace

std::string_view mode_name(TrainMode mode) {
  return mode == TrainMode::Fusion ? "fusion" : "3d-only";
}

TrainMode parse_mode(std::string_view name) {
  if (name == "fusion") {
    return TrainMode::Fusion;
  }
  if (name == "3d-only" || name == "three_d_only") {
    return TrainMode::ThreeDOnly;
  }
  fail(ErrorKind::InvalidArgument, "unknown training mode '{}' (expected fusion or 3d-only)", name);
}

// ---------------------------------------------------------------------------
// Configuration

void TrainingConfig::validate() const {
  PF_THROW_IF(stage == StageTag::None, ErrorKind::InvalidArgument, "training config needs a stage");
  PF_THROW_IF(epochs < 1, ErrorKind::InvalidArgument, "epochs must be >= 1, got {}", epochs);
  PF_THROW_IF(batch_size < 1, ErrorKind::InvalidArgument, "batch_size must be >= 1, got {}", batch_size);
  PF_THROW_IF(!(initial_lr > 0.0), ErrorKind::InvalidArgument, "initial_lr must be positive");
  PF_THROW_IF(!(lr_drop_factor >= 1.0), ErrorKind::InvalidArgument, "lr_drop_factor must be >= 1");
  for (size_t i = 0; i < lr_drop_epochs.size(); ++i) {
    PF_THROW_IF(
        lr_drop_epochs[i] < 0 || lr_drop_epochs[i] >= epochs,
        ErrorKind::InvalidArgument,
        "lr drop epoch {} must lie in [0, {})",
        lr_drop_epochs[i],
        epochs);
    PF_THROW_IF(
        i > 0 && lr_drop_epochs[i] <= lr_drop_epochs[i - 1],
        ErrorKind::InvalidArgument,
        "lr drop epochs must be strictly increasing");
  }
  LossWeights{lambda_reg, lambda_geo, beta}.validate();
  PF_THROW_IF(epoch_scale < 1, ErrorKind::InvalidArgument, "epoch_scale must be >= 1");
  PF_THROW_IF(validation_every < 1, ErrorKind::InvalidArgument, "validation_every must be >= 1");
  PF_THROW_IF(
      stage == StageTag::S1 && (lambda_reg != 0.0 || lambda_geo != 0.0),
      ErrorKind::InvalidArgument,
      "stage s1 trains the 2D loss only; lambda_reg and lambda_geo must be 0");
  PF_THROW_IF(
      stage == StageTag::S1 && mode == TrainMode::ThreeDOnly,
      ErrorKind::InvalidArgument,
      "3d-only training starts at stage s2");
  PF_THROW_IF(
      stage == StageTag::S2 && mode == TrainMode::Fusion && lambda_geo != 0.0,
      ErrorKind::InvalidArgument,
      "fusion stage s2 requires lambda_geo = 0");
}

nlohmann::json TrainingConfig::to_json() const {
  return {
      {"stage", stage_name(stage)},
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"initial_lr", initial_lr},
      {"lr_drop_epochs", lr_drop_epochs},
      {"lr_drop_factor", lr_drop_factor},
      {"lambda_reg", lambda_reg},
      {"lambda_geo", lambda_geo},
      {"beta", beta},
      {"epoch_scale", epoch_scale},
      {"validation_every", validation_every},
      {"seed", seed},
      {"mode", mode_name(mode)},
  };
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j, const TrainingConfig& base) {
  PF_THROW_IF(!j.is_object(), ErrorKind::Parse, "training config must be a JSON object");
  TrainingConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "stage") {
        c.stage = parse_stage(value.get<std::string>());
      } else if (key == "epochs") {
        c.epochs = value.get<int>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<int>();
      } else if (key == "initial_lr") {
        c.initial_lr = value.get<double>();
      } else if (key == "lr_drop_epochs") {
        c.lr_drop_epochs = value.get<std::vector<int>>();
      } else if (key == "lr_drop_factor") {
        c.lr_drop_factor = value.get<double>();
      } else if (key == "lambda_reg") {
        c.lambda_reg = value.get<double>();
      } else if (key == "lambda_geo") {
        c.lambda_geo = value.get<double>();
      } else if (key == "beta") {
        c.beta = value.get<double>();
      } else if (key == "epoch_scale") {
        c.epoch_scale = value.get<int>();
      } else if (key == "validation_every") {
        c.validation_every = value.get<int>();
      } else if (key == "seed") {
        c.seed = value.get<uint64_t>();
      } else if (key == "mode") {
        c.mode = parse_mode(value.get<std::string>());
      } else {
        fail(ErrorKind::Parse, "unknown training config key '{}'", key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, "bad training config: {}", e.what());
  }
  return c;
}

uint64_t TrainingConfig::digest() const {
  return fnv1a(to_json().dump());
}

TrainingConfig default_config(StageTag stage, TrainMode mode) {
  TrainingConfig c;
  c.stage = stage;
  c.mode = mode;
  c.batch_size = 32;
  c.initial_lr = 1e-3;
  c.lr_drop_factor = 10.0;
  c.beta = 1.0;
  c.validation_every = 5;
  switch (stage) {
    case StageTag::S1:
      PF_THROW_IF(
          mode == TrainMode::ThreeDOnly, ErrorKind::InvalidArgument, "3d-only training has no stage s1");
      c.epochs = 140;
      c.lr_drop_epochs = {90, 120};
      break;
    case StageTag::S2:
      c.epochs = 60;
      c.lr_drop_epochs = {45};
      c.lambda_reg = 0.1;
      if (mode == TrainMode::ThreeDOnly) {
        c.batch_size = 128;
        c.epochs = 5;
        c.lr_drop_epochs = {3};
        c.lambda_reg = 1.0;
      }
      break;
    case StageTag::S3:
      c.epochs = 10;
      c.initial_lr = 1e-4;
      c.lambda_reg = 0.1;
      c.lambda_geo = 0.01;
      if (mode == TrainMode::ThreeDOnly) {
        c.batch_size = 128;
        c.epochs = 2;
      }
      break;
    case StageTag::None:
      fail(ErrorKind::InvalidArgument, "no default config for stage 'none'");
  }
  return c;
}

double lr_at(const TrainingConfig& config, int epoch) {
  PF_THROW_IF(
      epoch < 0 || epoch >= config.epochs,
      ErrorKind::InvalidArgument,
      "epoch {} outside [0, {})",
      epoch,
      config.epochs);
  double lr = config.initial_lr;
  for (int drop : config.lr_drop_epochs) {
    if (drop <= epoch) {
      lr /= config.lr_drop_factor;
    }
  }
  return lr;
}

TrainingConfig scale_epochs(const TrainingConfig& config, int factor) {
  PF_THROW_IF(factor < 1, ErrorKind::InvalidArgument, "epoch scale factor must be >= 1, got {}", factor);
  TrainingConfig c = config;
  c.epochs *= factor;
  for (int& d : c.lr_drop_epochs) {
    d *= factor;
  }
  c.epoch_scale *= factor;
  return c;
}

bool is_validation_epoch(const TrainingConfig& config, int epoch) {
  return (epoch + 1) % config.validation_every == 0 || epoch == config.epochs - 1;
}

FusionEpochPlan plan_fusion_epoch(size_t n_2d, size_t n_3d, std::mt19937_64& rng) {
  PF_THROW_IF(
      n_2d == 0 || n_3d == 0,
      ErrorKind::Precondition,
      "fusion training needs both 2D and 3D samples (got {} and {})",
      n_2d,
      n_3d);
  const size_t n = std::min(n_2d, n_3d);
  auto draw = [&](size_t total) {
    std::vector<size_t> all(total);
    std::iota(all.begin(), all.end(), size_t{0});
    // Partial Fisher-Yates: the first n entries are a uniform sample without replacement.
    for (size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<size_t> pick(i, total - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(n);
    return all;
  };
  FusionEpochPlan plan;
  plan.indices_2d = draw(n_2d);
  plan.indices_3d = draw(n_3d);
  plan.order.reserve(2 * n);
  for (size_t i = 0; i < n; ++i) {
    plan.order.emplace_back(SampleSource::Set2D, plan.indices_2d[i]);
    plan.order.emplace_back(SampleSource::Set3D, plan.indices_3d[i]);
  }
  return plan;
}

nlohmann::json MetricLogEntry::to_json() const {
  return {
      {"stage", stage},
      {"epoch", epoch},
      {"split", split},
      {"pckh", finite_or_null(pckh)},
      {"mpjpe", finite_or_null(mpjpe)},
      {"loss_2d", finite_or_null(loss_2d)},
      {"loss_dep", finite_or_null(loss_dep)},
      {"lr", lr},
      {"wall_seconds", wall_seconds},
      {"bone_ratio_variance", finite_or_null(bone_ratio_variance)},
  };
}

nlohmann::json GradientRecord::to_json() const {
  return {
      {"steps", steps},
      {"depth_head_grad_max_abs", depth_head_grad_max_abs},
      {"geo_contribution_max_abs", geo_contribution_max_abs},
      {"geo_grad_max_abs", geo_grad_max_abs},
      {"geo_terms", geo_terms},
  };
}

// ---------------------------------------------------------------------------
// Stage execution

namespace {

struct SampleLoss {
  double l2d = 0.0;
  double ldep = 0.0;
};

struct LossContext {
  const NetworkSpec& spec;
  const TrainingConfig& config;
  const std::vector<BoneGroup>& groups;
};

Heatmap target_heatmaps(const HarmonizedSample& s, const NetworkSpec& spec) {
  Pose2D scaled = s.pose2d;
  const double inv = 1.0 / spec.stride();
  for (auto& c : scaled.coords) {
    c *= inv;
  }
  return render_pose_heatmaps(scaled, spec.heatmap_size, spec.heatmap_size, spec.sigma);
}

bool has_depth_loss(const TrainingConfig& c) {
  return c.stage != StageTag::S1;
}

// Losses for one sample; when the gradient outputs are given they receive
// d(loss)/d(outputs) already divided by `batch`.
SampleLoss sample_loss(
    const LossContext& ctx,
    const HarmonizedSample& s,
    SampleSource source,
    const Eigen::MatrixXf& heatmaps,
    const Eigen::VectorXf& depth,
    double batch,
    Eigen::MatrixXf* d_heatmaps,
    Eigen::VectorXf* d_depth,
    GradientRecord* record) {
  SampleLoss out;
  const Heatmap pred = to_heatmap(heatmaps, ctx.spec.heatmap_size);
  const Heatmap target = target_heatmaps(s, ctx.spec);
  Heatmap g;
  out.l2d = loss_2d_heatmap(pred, target, s.pose2d.visible, d_heatmaps ? &g : nullptr) / kNumJoints;
  if (d_heatmaps) {
    const double k = 1.0 / (kNumJoints * batch);
    d_heatmaps->resize(kNumJoints, static_cast<Eigen::Index>(pred.plane_size()));
    for (int j = 0; j < kNumJoints; ++j) {
      const auto plane = g.plane(j);
      for (size_t p = 0; p < plane.size(); ++p) {
        (*d_heatmaps)(j, static_cast<Eigen::Index>(p)) = static_cast<float>(plane[p] * k);
      }
    }
  }
  if (d_depth) {
    d_depth->setZero(kNumJoints);
  }
  if (!has_depth_loss(ctx.config)) {
    return out;
  }

  DepthPrediction z{};
  for (int j = 0; j < kNumJoints; ++j) {
    z[j] = static_cast<double>(depth[j]);
  }
  if (source == SampleSource::Set3D) {
    DepthPrediction g_dep{};
    const double l = loss_depth_smooth_l1(z, *s.depth, s.pose2d.visible, ctx.config.beta, d_depth ? &g_dep : nullptr);
    out.ldep = loss_depth_combined(source, DepthTerms{l, 0.0}, LossWeights{ctx.config.lambda_reg, ctx.config.lambda_geo, ctx.config.beta});
    if (d_depth) {
      for (int j = 0; j < kNumJoints; ++j) {
        (*d_depth)[j] = static_cast<float>(ctx.config.lambda_reg * g_dep[j] / batch);
      }
    }
  } else {
    const Pose3D geo_pose = assemble_geo_pose(s.pose2d, z);
    std::array<Eigen::Vector3d, kNumJoints> g_geo;
    const double l = loss_geometric(geo_pose, ctx.groups, d_depth ? &g_geo : nullptr);
    out.ldep = loss_depth_combined(source, DepthTerms{0.0, l}, LossWeights{ctx.config.lambda_reg, ctx.config.lambda_geo, ctx.config.beta});
    if (d_depth) {
      for (int j = 0; j < kNumJoints; ++j) {
        // Only z carries a gradient: xy are ground-truth constants.
        const double gz = ctx.config.lambda_geo * g_geo[j].z();
        (*d_depth)[j] = static_cast<float>(gz / batch);
        if (record) {
          record->geo_grad_max_abs = std::max(record->geo_grad_max_abs, std::abs(gz));
        }
      }
    }
    if (record) {
      record->geo_contribution_max_abs = std::max(record->geo_contribution_max_abs, std::abs(out.ldep));
      ++record->geo_terms;
    }
  }
  return out;
}

std::vector<size_t> usable_3d(const Dataset& d) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < d.size(); ++i) {
    const auto& s = d.samples[i];
    if (!s.excluded && s.depth && s.source == SampleSource::Set3D) {
      idx.push_back(i);
    }
  }
  return idx;
}

void check_stage_order(const TrainingConfig& c, StageTag previous) {
  switch (c.stage) {
    case StageTag::S1:
      PF_THROW_IF(
          previous != StageTag::None,
          ErrorKind::Precondition,
          "stage s1 starts from a fresh network, not from a {} checkpoint",
          stage_name(previous));
      break;
    case StageTag::S2:
      if (c.mode == TrainMode::Fusion) {
        PF_THROW_IF(
            previous != StageTag::S1,
            ErrorKind::Precondition,
            "fusion stage s2 needs a stage s1 checkpoint to resume from (got {})",
            stage_name(previous));
      } else {
        PF_THROW_IF(
            previous != StageTag::None && previous != StageTag::S1,
            ErrorKind::Precondition,
            "3d-only stage s2 cannot resume from a {} checkpoint",
            stage_name(previous));
      }
      break;
    case StageTag::S3:
      PF_THROW_IF(
          previous != StageTag::S2,
          ErrorKind::Precondition,
          "stage s3 needs a stage s2 checkpoint to resume from (got {})",
          stage_name(previous));
      break;
    case StageTag::None:
      fail(ErrorKind::InvalidArgument, "cannot run stage 'none'");
  }
}

struct ValidationOutcome {
  EvalReport report;
  SampleLoss mean_loss;
};

ValidationOutcome validate_network(const Network& net, const Dataset& val, const LossContext& ctx) {
  ValidationOutcome out;
  out.report = evaluate(net, val, kValidationDecode);
  double l2d = 0.0;
  double ldep = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < val.size(); ++i) {
    const auto& s = val.samples[i];
    if (s.excluded) {
      continue;
    }
    Network::Trace trace;
    net.forward_train(val.images[i], trace);
    const SampleSource src = (s.source == SampleSource::Set3D && s.depth) ? SampleSource::Set3D : SampleSource::Set2D;
    const SampleLoss l = sample_loss(ctx, s, src, trace.heatmaps, trace.depth, 1.0, nullptr, nullptr, nullptr);
    l2d += l.l2d;
    ldep += l.ldep;
    ++n;
  }
  out.mean_loss.l2d = n > 0 ? l2d / static_cast<double>(n) : kNaN;
  out.mean_loss.ldep = n > 0 ? ldep / static_cast<double>(n) : kNaN;
  return out;
}

} // namespace

StageResult run_stage(
    const TrainingConfig& config,
    Network& network,
    StageTag previous,
    const StageData& data,
    const LogSink& sink) {
  config.validate();
  check_stage_order(config, previous);
  PF_THROW_IF(data.val == nullptr || data.val->size() == 0, ErrorKind::Precondition, "validation set is empty");

  const bool fusion = config.mode == TrainMode::Fusion;
  const bool uses_2d = config.stage == StageTag::S1 || fusion;
  const bool uses_3d = config.stage != StageTag::S1;
  PF_THROW_IF(
      uses_2d && (data.data_2d == nullptr || data.data_2d->size() == 0),
      ErrorKind::Precondition,
      "stage {} needs 2D training data",
      stage_name(config.stage));
  std::vector<size_t> idx3;
  if (uses_3d) {
    PF_THROW_IF(
        data.data_3d == nullptr || data.data_3d->size() == 0,
        ErrorKind::Precondition,
        "stage {} needs 3D training data",
        stage_name(config.stage));
    idx3 = usable_3d(*data.data_3d);
    PF_THROW_IF(idx3.empty(), ErrorKind::Precondition, "every 3D training sample is excluded");
  }

  const LossContext ctx{network.spec(), config, reference_bone_groups()};
  nn::Adam adam(network.store());
  std::mt19937_64 rng(fnv1a(stage_name(config.stage), config.seed * 0x9e3779b97f4a7c15ull + 1));

  StageResult result;
  const std::string stage = std::string(stage_name(config.stage));
  auto emit = [&](const MetricLogEntry& e) {
    result.log.push_back(e);
    if (sink) {
      sink(e);
    }
  };

  nn::Grads grads = network.zero_grads();
  Network::Trace trace;
  Eigen::MatrixXf d_hm;
  Eigen::VectorXf d_depth;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_at(config, epoch);

    std::vector<std::pair<SampleSource, size_t>> order;
    if (config.stage == StageTag::S1) {
      std::vector<size_t> all(data.data_2d->size());
      std::iota(all.begin(), all.end(), size_t{0});
      std::shuffle(all.begin(), all.end(), rng);
      for (size_t i : all) {
        order.emplace_back(SampleSource::Set2D, i);
      }
    } else if (fusion) {
      const FusionEpochPlan plan = plan_fusion_epoch(data.data_2d->size(), idx3.size(), rng);
      for (const auto& [src, i] : plan.order) {
        order.emplace_back(src, src == SampleSource::Set3D ? idx3[i] : i);
      }
    } else {
      std::vector<size_t> all = idx3;
      std::shuffle(all.begin(), all.end(), rng);
      for (size_t i : all) {
        order.emplace_back(SampleSource::Set3D, i);
      }
    }

    double sum_l2d = 0.0;
    double sum_ldep = 0.0;
    size_t batch_index = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size), ++batch_index) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      const double b = static_cast<double>(end - start);
      for (auto& g : grads) {
        g.setZero();
      }
      for (size_t k = start; k < end; ++k) {
        const auto [src, i] = order[k];
        const Dataset& d = src == SampleSource::Set3D ? *data.data_3d : *data.data_2d;
        const HarmonizedSample& s = d.samples[i];
        network.forward_train(d.images[i], trace);
        const SampleLoss l =
            sample_loss(ctx, s, src, trace.heatmaps, trace.depth, b, &d_hm, &d_depth, &result.gradients);
        try {
          loss_total(l.l2d, l.ldep);
        } catch (const Error& e) {
          fail(
              ErrorKind::Divergence,
              "stage {} epoch {} batch {} (sample '{}'): {}",
              stage,
              epoch,
              batch_index,
              s.image,
              e.what());
        }
        sum_l2d += l.l2d;
        sum_ldep += l.ldep;
        network.backward(trace, d_hm, d_depth, grads);
      }
      for (int p : network.depth_head_params()) {
        result.gradients.depth_head_grad_max_abs =
            std::max(result.gradients.depth_head_grad_max_abs, static_cast<double>(grads[p].cwiseAbs().maxCoeff()));
      }
      adam.step(network.store(), grads, lr);
      ++result.gradients.steps;
    }

    MetricLogEntry train;
    train.stage = stage;
    train.epoch = epoch;
    train.split = "train";
    train.pckh = kNaN;
    train.mpjpe = kNaN;
    train.bone_ratio_variance = kNaN;
    train.loss_2d = sum_l2d / static_cast<double>(order.size());
    train.loss_dep = sum_ldep / static_cast<double>(order.size());
    train.lr = lr;
    train.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit(train);

    if (is_validation_epoch(config, epoch)) {
      const auto v0 = std::chrono::steady_clock::now();
      ValidationOutcome v = validate_network(network, *data.val, ctx);
      MetricLogEntry val;
      val.stage = stage;
      val.epoch = epoch;
      val.split = "val";
      val.pckh = v.report.pckh_at_05;
      val.mpjpe = v.report.mpjpe_mm;
      val.bone_ratio_variance = v.report.bone_ratio_variance;
      val.loss_2d = v.mean_loss.l2d;
      val.loss_dep = v.mean_loss.ldep;
      val.lr = lr;
      val.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - v0).count();
      emit(val);
      result.final_validation = std::move(v.report);
    }
  }

  nlohmann::json metrics = {{"gradients", result.gradients.to_json()}, {"config", config.to_json()}};
  if (result.final_validation) {
    metrics["validation"] = result.final_validation->to_json();
  }
  result.checkpoint = make_checkpoint(network, config.stage, config.digest(), std::move(metrics));
  return result;
}

PipelineResult train_pipeline(
    const std::vector<TrainingConfig>& configs,
    const NetworkSpec& spec,
    const StageData& data,
    const LogSink& sink) {
  PF_THROW_IF(configs.empty(), ErrorKind::InvalidArgument, "pipeline needs at least one stage config");
  const TrainMode mode = configs.front().mode;
  const StageTag first = mode == TrainMode::Fusion ? StageTag::S1 : StageTag::S2;
  for (size_t i = 0; i < configs.size(); ++i) {
    const auto expected = static_cast<StageTag>(static_cast<int>(first) + static_cast<int>(i));
    PF_THROW_IF(
        configs[i].mode != mode || configs[i].stage != expected || static_cast<int>(expected) > 3,
        ErrorKind::Precondition,
        "pipeline config {} is {} ({}); expected {} in {} mode",
        i,
        stage_name(configs[i].stage),
        mode_name(configs[i].mode),
        static_cast<int>(expected) <= 3 ? stage_name(expected) : "nothing",
        mode_name(mode));
  }

  PipelineResult out;
  Network network(spec, configs.front().seed);
  StageTag previous = StageTag::None;
  for (const auto& c : configs) {
    StageResult r = run_stage(c, network, previous, data, sink);
    out.log.insert(out.log.end(), r.log.begin(), r.log.end());
    previous = c.stage;
    out.stages.push_back(std::move(r));
  }
  return out;
}

} // namespace posefuse
