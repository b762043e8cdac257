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

#include "posefuse/nn.hpp"

#include "posefuse/error.hpp"

#include <algorithm>
#include <cmath>

namespace posefuse::nn {

int ParamStore::add(std::string name, std::vector<int> dims) {
  Eigen::Index size = 1;
  for (int d : dims) {
    size *= d;
  }
  params_.push_back(Param{std::move(name), std::move(dims), Eigen::VectorXf::Zero(size)});
  return static_cast<int>(params_.size()) - 1;
}

size_t ParamStore::total_size() const noexcept {
  size_t n = 0;
  for (const auto& p : params_) {
    n += static_cast<size_t>(p.value.size());
  }
  return n;
}

std::vector<Eigen::VectorXf> ParamStore::zeros_like() const {
  std::vector<Eigen::VectorXf> out;
  out.reserve(params_.size());
  for (const auto& p : params_) {
    out.push_back(Eigen::VectorXf::Zero(p.value.size()));
  }
  return out;
}

namespace {

void normal_fill(Eigen::VectorXf& v, float stddev, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, stddev);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = dist(rng);
  }
}

void init_weights(Eigen::VectorXf& v, int fan_in, Init init, std::mt19937_64& rng) {
  switch (init) {
    case Init::He:
      normal_fill(v, std::sqrt(2.0f / static_cast<float>(fan_in)), rng);
      break;
    case Init::Small:
      normal_fill(v, 1e-3f, rng);
      break;
    case Init::Zero:
      v.setZero();
      break;
  }
}

void apply_relu_mask(Eigen::MatrixXf& dy, const Eigen::MatrixXf& out) {
  dy = (out.array() > 0.0f).select(dy, 0.0f);
}

} // namespace

// Weight layout is out x (kernel * kernel * in) with the input channel fastest,
// which matches the im2col row order below.
Conv2d::Conv2d(ParamStore& store, const std::string& name, int in, int out, int kernel, int stride, bool relu)
    : in_(in), out_(out), kernel_(kernel), stride_(stride), pad_(kernel / 2), relu_(relu) {
  weight_ = store.add(name + ".weight", {out, kernel, kernel, in});
  bias_ = store.add(name + ".bias", {out});
}

void Conv2d::init(ParamStore& store, std::mt19937_64& rng, Init init) const {
  auto& w = store.params()[weight_].value;
  init_weights(w, in_ * kernel_ * kernel_, init, rng);
  store.params()[bias_].value.setZero();
}

Act Conv2d::forward(const ParamStore& store, const Act& x, Cache* cache) const {
  PF_THROW_IF(
      x.channels() != in_,
      ErrorKind::InvalidArgument,
      "convolution expects {} input channels, got {}",
      in_,
      x.channels());
  const int ho = out_size(x.h);
  const int wo = out_size(x.w);
  const int k_rows = in_ * kernel_ * kernel_;

  Eigen::MatrixXf col_local;
  Eigen::MatrixXf& col = cache ? cache->col : col_local;
  col.setZero(k_rows, static_cast<Eigen::Index>(ho) * wo);
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      float* dst = col.col(static_cast<Eigen::Index>(oy) * wo + ox).data();
      for (int dy = 0; dy < kernel_; ++dy) {
        const int iy = oy * stride_ - pad_ + dy;
        if (iy < 0 || iy >= x.h) {
          continue;
        }
        for (int dx = 0; dx < kernel_; ++dx) {
          const int ix = ox * stride_ - pad_ + dx;
          if (ix < 0 || ix >= x.w) {
            continue;
          }
          const float* src = x.m.col(static_cast<Eigen::Index>(iy) * x.w + ix).data();
          std::copy(src, src + in_, dst + (dy * kernel_ + dx) * in_);
        }
      }
    }
  }

  const Eigen::Map<const Eigen::MatrixXf> w(store.params()[weight_].value.data(), out_, k_rows);
  const auto& b = store.params()[bias_].value;
  Act y;
  y.h = ho;
  y.w = wo;
  y.m.noalias() = w * col;
  y.m.colwise() += b;
  if (relu_) {
    y.m = y.m.cwiseMax(0.0f);
  }
  if (cache) {
    cache->in_h = x.h;
    cache->in_w = x.w;
    cache->out = y;
  }
  return y;
}

Act Conv2d::backward(const ParamStore& store, Grads& grads, const Cache& cache, Act& dy, bool need_dx) const {
  if (relu_) {
    apply_relu_mask(dy.m, cache.out.m);
  }
  const int k_rows = in_ * kernel_ * kernel_;
  Eigen::Map<Eigen::MatrixXf> dw(grads[weight_].data(), out_, k_rows);
  dw.noalias() += dy.m * cache.col.transpose();
  grads[bias_] += dy.m.rowwise().sum();

  Act dx;
  if (!need_dx) {
    return dx;
  }
  const Eigen::Map<const Eigen::MatrixXf> w(store.params()[weight_].value.data(), out_, k_rows);
  Eigen::MatrixXf dcol;
  dcol.noalias() = w.transpose() * dy.m;

  dx.h = cache.in_h;
  dx.w = cache.in_w;
  dx.m.setZero(in_, static_cast<Eigen::Index>(dx.h) * dx.w);
  const int ho = dy.h;
  const int wo = dy.w;
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      const auto src_col = dcol.col(static_cast<Eigen::Index>(oy) * wo + ox);
      for (int ky = 0; ky < kernel_; ++ky) {
        const int iy = oy * stride_ - pad_ + ky;
        if (iy < 0 || iy >= dx.h) {
          continue;
        }
        for (int kx = 0; kx < kernel_; ++kx) {
          const int ix = ox * stride_ - pad_ + kx;
          if (ix < 0 || ix >= dx.w) {
            continue;
          }
          dx.m.col(static_cast<Eigen::Index>(iy) * dx.w + ix) += src_col.segment((ky * kernel_ + kx) * in_, in_);
        }
      }
    }
  }
  return dx;
}

Linear::Linear(ParamStore& store, const std::string& name, int in, int out, bool relu)
    : in_(in), out_(out), relu_(relu) {
  weight_ = store.add(name + ".weight", {out, in});
  bias_ = store.add(name + ".bias", {out});
}

void Linear::init(ParamStore& store, std::mt19937_64& rng, Init init) const {
  auto& w = store.params()[weight_].value;
  init_weights(w, in_, init, rng);
  store.params()[bias_].value.setZero();
}

Eigen::VectorXf Linear::forward(const ParamStore& store, const Eigen::VectorXf& x, Cache* cache) const {
  PF_THROW_IF(
      x.size() != in_, ErrorKind::InvalidArgument, "dense layer expects {} inputs, got {}", in_, x.size());
  const Eigen::Map<const Eigen::MatrixXf> w(store.params()[weight_].value.data(), out_, in_);
  Eigen::VectorXf y = w * x + store.params()[bias_].value;
  if (relu_) {
    y = y.cwiseMax(0.0f);
  }
  if (cache) {
    cache->in = x;
    cache->out = y;
  }
  return y;
}

Eigen::VectorXf Linear::backward(const ParamStore& store, Grads& grads, const Cache& cache, Eigen::VectorXf dy) const {
  if (relu_) {
    dy = (cache.out.array() > 0.0f).select(dy, 0.0f);
  }
  Eigen::Map<Eigen::MatrixXf> dw(grads[weight_].data(), out_, in_);
  dw.noalias() += dy * cache.in.transpose();
  grads[bias_] += dy;
  const Eigen::Map<const Eigen::MatrixXf> w(store.params()[weight_].value.data(), out_, in_);
  return w.transpose() * dy;
}

Act upsample2x(const Act& x) {
  Act y;
  y.h = x.h * 2;
  y.w = x.w * 2;
  y.m.resize(x.m.rows(), static_cast<Eigen::Index>(y.h) * y.w);
  for (int v = 0; v < y.h; ++v) {
    for (int u = 0; u < y.w; ++u) {
      y.m.col(static_cast<Eigen::Index>(v) * y.w + u) = x.m.col(static_cast<Eigen::Index>(v / 2) * x.w + u / 2);
    }
  }
  return y;
}

Act upsample2x_backward(const Act& dy) {
  Act dx;
  dx.h = dy.h / 2;
  dx.w = dy.w / 2;
  dx.m.setZero(dy.m.rows(), static_cast<Eigen::Index>(dx.h) * dx.w);
  for (int v = 0; v < dy.h; ++v) {
    for (int u = 0; u < dy.w; ++u) {
      dx.m.col(static_cast<Eigen::Index>(v / 2) * dx.w + u / 2) += dy.m.col(static_cast<Eigen::Index>(v) * dy.w + u);
    }
  }
  return dx;
}

Adam::Adam(const ParamStore& store, AdamConfig config)
    : config_(config), m_(store.zeros_like()), v_(store.zeros_like()) {}

void Adam::step(ParamStore& store, const Grads& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const float b1 = static_cast<float>(config_.beta1);
  const float b2 = static_cast<float>(config_.beta2);
  const float step = static_cast<float>(lr / c1);
  const float inv_c2 = static_cast<float>(1.0 / c2);
  const float eps = static_cast<float>(config_.eps);
  auto& params = store.params();
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0f - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0f - b2) * grads[i].cwiseAbs2();
    params[i].value.array() -= step * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + eps);
  }
}

} // namespace posefuse::nn
