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

#include "posefuse/heatmap.hpp"
#include "posefuse/image.hpp"
#include "posefuse/losses.hpp"
#include "posefuse/nn.hpp"
#include "posefuse/skeleton.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

namespace posefuse {

struct NetworkSpec {
  int input_size = 256;
  int heatmap_size = 64;
  double sigma = 2.0;  // label Gaussian, heatmap pixels
  int width = 32;      // channels at heatmap resolution

  /// 64 px input at full heatmap resolution: the configuration used for CPU-scale experiments.
  static NetworkSpec desk();

  int stride() const noexcept {
    return input_size / heatmap_size;
  }
  void validate() const;
  nlohmann::json to_json() const;
  static NetworkSpec from_json(const nlohmann::json& j);
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

enum class StageTag { None, S1, S2, S3 };

std::string_view stage_name(StageTag stage);
StageTag parse_stage(std::string_view name);

enum class Decode { Argmax, Soft };

std::string_view decode_name(Decode decode);
Decode parse_decode(std::string_view name);

inline constexpr double kSoftDecodeTemperature = 0.1;

/// Deepest encoder volume; the depth head reads it.
struct Latent {
  nn::Act features;
};

/// Encoder-decoder producing 16 heatmaps at heatmap resolution, plus a fully
/// connected depth head on the global max pool of the deepest features. Float
/// throughout.
class Network {
 public:
  struct Trace {
    std::vector<nn::Conv2d::Cache> stem;
    nn::Conv2d::Cache enc0, down1, enc1, down2, enc2a, enc2b;
    nn::Conv2d::Cache lat1, dec1, lat0, dec0, head;
    nn::Linear::Cache fc1, fc2, fc3;
    std::vector<Eigen::Index> pool_argmax;  // per latent channel
    Eigen::MatrixXf heatmaps;  // 16 x (H * W)
    Eigen::VectorXf depth;     // 16
  };

  Network(const NetworkSpec& spec, uint64_t seed);

  const NetworkSpec& spec() const noexcept {
    return spec_;
  }

  std::pair<Heatmap, Latent> forward_2d(const Image& image) const;
  DepthPrediction forward_depth(const Latent& latent) const;

  /// Full forward pass keeping what backward needs.
  void forward_train(const Image& image, Trace& trace) const;
  /// Accumulates parameter gradients given d(loss)/d(heatmaps) and d(loss)/d(depth).
  void backward(Trace& trace, const Eigen::MatrixXf& d_heatmaps, const Eigen::VectorXf& d_depth, nn::Grads& grads)
      const;

  nn::ParamStore& store() noexcept {
    return store_;
  }
  const nn::ParamStore& store() const noexcept {
    return store_;
  }
  nn::Grads zero_grads() const {
    return store_.zeros_like();
  }
  size_t parameter_count() const noexcept {
    return store_.total_size();
  }
  /// Parameter indices that belong to the depth head.
  const std::vector<int>& depth_head_params() const noexcept {
    return depth_params_;
  }
  uint64_t architecture_digest() const;

 private:
  nn::Act encode(const Image& image, Trace* trace) const;
  Eigen::MatrixXf decode_heatmaps(const nn::Act& s0, const nn::Act& s1, const nn::Act& latent, Trace* trace) const;

  NetworkSpec spec_;
  nn::ParamStore store_;
  std::vector<nn::Conv2d> stem_;
  nn::Conv2d enc0_, down1_, enc1_, down2_, enc2a_, enc2b_;
  nn::Conv2d lat1_, dec1_, lat0_, dec0_, head_;
  nn::Linear fc1_, fc2_, fc3_;
  std::vector<int> depth_params_;
};

/// Image as a 3 x (H * W) activation with values in [0, 1].
nn::Act image_to_input(const Image& image);

Heatmap to_heatmap(const Eigen::MatrixXf& planes, int size);

/// Image-scaled 3D prediction: xy in image pixels from the heatmap decode, z from
/// the depth head minus the root's predicted depth.
Pose3D predict_pose3d(const Network& network, const Image& image, Decode decode);

/// Same assembly from already computed network outputs.
Pose3D assemble_prediction(const Heatmap& heatmaps, const DepthPrediction& depth, int stride, Decode decode);

/// Pose used by the geometric loss on 2D-only samples: ground-truth xy (constants)
/// and predicted z. Its gradient with respect to z is the only path back to the network.
Pose3D assemble_geo_pose(const Pose2D& gt_pose2d, const DepthPrediction& pred_depth);

struct Checkpoint {
  NetworkSpec spec;
  uint64_t architecture_digest = 0;
  StageTag stage_completed = StageTag::None;
  uint64_t config_digest = 0;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<nn::Param> params;
};

Checkpoint make_checkpoint(const Network& network, StageTag stage, uint64_t config_digest, nlohmann::json metrics);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Rebuilds the network; fails with Incompatible if the stored architecture differs.
Network network_from_checkpoint(const Checkpoint& checkpoint);

} // namespace posefuse
