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

// Minimal float building blocks for the reference network: im2col convolutions,
// dense layers, nearest upsampling and Adam. Everything is single threaded and
// deterministic for a fixed seed.

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace posefuse::nn {

/// Feature map stored as channels x (height * width); column p is pixel p in
/// row-major order, so a pixel's channel vector is contiguous.
struct Act {
  Eigen::MatrixXf m;
  int h = 0;
  int w = 0;

  int channels() const noexcept {
    return static_cast<int>(m.rows());
  }
};

struct Param {
  std::string name;
  std::vector<int> dims;
  Eigen::VectorXf value;
};

/// Owns every trainable tensor of a model. Layers refer to entries by index.
class ParamStore {
 public:
  int add(std::string name, std::vector<int> dims);

  std::vector<Param>& params() noexcept {
    return params_;
  }
  const std::vector<Param>& params() const noexcept {
    return params_;
  }
  size_t total_size() const noexcept;

  /// Zero-filled buffers shaped like the parameters.
  std::vector<Eigen::VectorXf> zeros_like() const;

 private:
  std::vector<Param> params_;
};

using Grads = std::vector<Eigen::VectorXf>;

/// Small is a normal with std 0.001, used for output layers without an activation.
enum class Init { He, Small, Zero };

class Conv2d {
 public:
  struct Cache {
    Eigen::MatrixXf col;
    Act out;  // post-activation, used for the ReLU mask
    int in_h = 0;
    int in_w = 0;
  };

  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, int in, int out, int kernel, int stride, bool relu);

  void init(ParamStore& store, std::mt19937_64& rng, Init init) const;
  Act forward(const ParamStore& store, const Act& x, Cache* cache) const;
  /// Consumes dy (ReLU masking is applied in place). Returns dx unless `need_dx` is false.
  Act backward(const ParamStore& store, Grads& grads, const Cache& cache, Act& dy, bool need_dx) const;

  int out_size(int in) const noexcept {
    return (in + 2 * pad_ - kernel_) / stride_ + 1;
  }
  int in_channels() const noexcept {
    return in_;
  }
  int out_channels() const noexcept {
    return out_;
  }

 private:
  int in_ = 0;
  int out_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  int pad_ = 0;
  bool relu_ = false;
  int weight_ = -1;
  int bias_ = -1;
};

class Linear {
 public:
  struct Cache {
    Eigen::VectorXf in;
    Eigen::VectorXf out;
  };

  Linear() = default;
  Linear(ParamStore& store, const std::string& name, int in, int out, bool relu);

  void init(ParamStore& store, std::mt19937_64& rng, Init init) const;
  Eigen::VectorXf forward(const ParamStore& store, const Eigen::VectorXf& x, Cache* cache) const;
  Eigen::VectorXf backward(const ParamStore& store, Grads& grads, const Cache& cache, Eigen::VectorXf dy) const;

  int in_features() const noexcept {
    return in_;
  }
  int out_features() const noexcept {
    return out_;
  }

 private:
  int in_ = 0;
  int out_ = 0;
  bool relu_ = false;
  int weight_ = -1;
  int bias_ = -1;
};

Act upsample2x(const Act& x);
Act upsample2x_backward(const Act& dy);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const ParamStore& store, AdamConfig config = {});
  void step(ParamStore& store, const Grads& grads, double lr);
  int64_t steps() const noexcept {
    return t_;
  }

 private:
  AdamConfig config_;
  Grads m_;
  Grads v_;
  int64_t t_ = 0;
};

} // namespace posefuse::nn
