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

#include "posefuse/model.hpp"

#include "posefuse/error.hpp"
#include "posefuse/hash.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace posefuse {

namespace {

// Per-row maximum; ties go to the first column so the backward route is fixed.
Eigen::VectorXf global_max_pool(const Eigen::MatrixXf& m, std::vector<Eigen::Index>* argmax) {
  Eigen::VectorXf out(m.rows());
  if (argmax) {
    argmax->assign(static_cast<size_t>(m.rows()), 0);
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) {
        best = c;
      }
    }
    out[r] = m(r, best);
    if (argmax) {
      (*argmax)[static_cast<size_t>(r)] = best;
    }
  }
  return out;
}

} // namespace

NetworkSpec NetworkSpec::desk() {
  NetworkSpec s;
  s.input_size = 64;
  s.heatmap_size = 64;
  s.sigma = 2.0;
  s.width = 32;
  return s;
}

void NetworkSpec::validate() const {
  PF_THROW_IF(
      heatmap_size <= 0 || heatmap_size % 4 != 0,
      ErrorKind::InvalidArgument,
      "heatmap_size must be a positive multiple of 4, got {}",
      heatmap_size);
  PF_THROW_IF(
      input_size < heatmap_size || input_size % heatmap_size != 0,
      ErrorKind::InvalidArgument,
      "input_size {} must be a multiple of heatmap_size {}",
      input_size,
      heatmap_size);
  PF_THROW_IF(
      !std::has_single_bit(static_cast<unsigned>(stride())),
      ErrorKind::InvalidArgument,
      "input/heatmap ratio must be a power of two, got {}",
      stride());
  PF_THROW_IF(width < 2 || width % 2 != 0, ErrorKind::InvalidArgument, "width must be even and >= 2");
  PF_THROW_IF(!(sigma > 0.0), ErrorKind::InvalidArgument, "sigma must be positive");
}

nlohmann::json NetworkSpec::to_json() const {
  return {{"input_size", input_size}, {"heatmap_size", heatmap_size}, {"sigma", sigma}, {"width", width}};
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
  NetworkSpec s;
  try {
    s.input_size = j.at("input_size").get<int>();
    s.heatmap_size = j.at("heatmap_size").get<int>();
    s.sigma = j.at("sigma").get<double>();
    s.width = j.at("width").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, "bad network architecture: {}", e.what());
  }
  s.validate();
  return s;
}

std::string_view stage_name(StageTag stage) {
  switch (stage) {
    case StageTag::None:
      return "none";
    case StageTag::S1:
      return "s1";
    case StageTag::S2:
      return "s2";
    case StageTag::S3:
      return "s3";
  }
  return "none";
}

StageTag parse_stage(std::string_view name) {
  for (StageTag s : {StageTag::None, StageTag::S1, StageTag::S2, StageTag::S3}) {
    if (stage_name(s) == name) {
      return s;
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown stage '{}' (expected none, s1, s2 or s3)", name);
}

std::string_view decode_name(Decode decode) {
  return decode == Decode::Soft ? "soft" : "argmax";
}

Decode parse_decode(std::string_view name) {
  if (name == "argmax") {
    return Decode::Argmax;
  }
  if (name == "soft") {
    return Decode::Soft;
  }
  fail(ErrorKind::InvalidArgument, "unknown decode '{}' (expected argmax or soft)", name);
}

// ---------------------------------------------------------------------------
// Network

Network::Network(const NetworkSpec& spec, uint64_t seed) : spec_(spec) {
  spec_.validate();
  const int w = spec_.width;
  const int downs = std::countr_zero(static_cast<unsigned>(spec_.stride()));

  stem_.emplace_back(store_, "stem.0", 3, w / 2, 3, 1, true);
  for (int i = 0; i < downs; ++i) {
    stem_.emplace_back(store_, fmt::format("stem.{}", i + 1), w / 2, i == downs - 1 ? w : w / 2, 3, 2, true);
  }
  if (downs == 0) {
    stem_.emplace_back(store_, "stem.1", w / 2, w, 3, 1, true);
  }
  enc0_ = nn::Conv2d(store_, "enc0", w, w, 3, 1, true);
  down1_ = nn::Conv2d(store_, "down1", w, 2 * w, 3, 2, true);
  enc1_ = nn::Conv2d(store_, "enc1", 2 * w, 2 * w, 3, 1, true);
  down2_ = nn::Conv2d(store_, "down2", 2 * w, 4 * w, 3, 2, true);
  enc2a_ = nn::Conv2d(store_, "enc2a", 4 * w, 4 * w, 3, 1, true);
  enc2b_ = nn::Conv2d(store_, "enc2b", 4 * w, 4 * w, 3, 1, true);
  lat1_ = nn::Conv2d(store_, "lat1", 4 * w, 2 * w, 1, 1, false);
  dec1_ = nn::Conv2d(store_, "dec1", 2 * w, 2 * w, 3, 1, true);
  lat0_ = nn::Conv2d(store_, "lat0", 2 * w, w, 1, 1, false);
  dec0_ = nn::Conv2d(store_, "dec0", w, w, 3, 1, true);
  head_ = nn::Conv2d(store_, "head", w, kNumJoints, 1, 1, false);

  const int first_depth = static_cast<int>(store_.params().size());
  fc1_ = nn::Linear(store_, "depth.fc1", 4 * w, 768, true);
  fc2_ = nn::Linear(store_, "depth.fc2", 768, 384, true);
  fc3_ = nn::Linear(store_, "depth.fc3", 384, kNumJoints, false);
  for (int i = first_depth; i < static_cast<int>(store_.params().size()); ++i) {
    depth_params_.push_back(i);
  }

  std::mt19937_64 rng(seed);
  for (const auto& c : stem_) {
    c.init(store_, rng, nn::Init::He);
  }
  for (const nn::Conv2d* c : {&enc0_, &down1_, &enc1_, &down2_, &enc2a_, &enc2b_, &lat1_, &dec1_, &lat0_, &dec0_}) {
    c->init(store_, rng, nn::Init::He);
  }
  // A near-zero heatmap head keeps the first Adam steps from killing the ReLUs.
  head_.init(store_, rng, nn::Init::Small);
  fc1_.init(store_, rng, nn::Init::He);
  fc2_.init(store_, rng, nn::Init::He);
  // A zero last layer makes the untrained depth head predict exactly 0.
  fc3_.init(store_, rng, nn::Init::Zero);
}

nn::Act image_to_input(const Image& image) {
  nn::Act x;
  x.h = image.height;
  x.w = image.width;
  x.m.resize(3, static_cast<Eigen::Index>(image.width) * image.height);
  const float inv = 1.0f / 255.0f;
  for (Eigen::Index p = 0; p < x.m.cols(); ++p) {
    for (int c = 0; c < 3; ++c) {
      x.m(c, p) = static_cast<float>(image.rgb[static_cast<size_t>(p) * 3 + c]) * inv;
    }
  }
  return x;
}

Heatmap to_heatmap(const Eigen::MatrixXf& planes, int size) {
  Heatmap hm(static_cast<int>(planes.rows()), size, size);
  for (int j = 0; j < hm.joints; ++j) {
    auto dst = hm.plane(j);
    for (size_t p = 0; p < dst.size(); ++p) {
      dst[p] = static_cast<double>(planes(j, static_cast<Eigen::Index>(p)));
    }
  }
  return hm;
}

nn::Act Network::encode(const Image& image, Trace* trace) const {
  PF_THROW_IF(
      image.width != spec_.input_size || image.height != spec_.input_size,
      ErrorKind::InvalidArgument,
      "image is {}x{}, network expects {}x{}",
      image.width,
      image.height,
      spec_.input_size,
      spec_.input_size);
  PF_THROW_IF(
      image.rgb.size() != static_cast<size_t>(image.width) * image.height * 3,
      ErrorKind::InvalidArgument,
      "image buffer size does not match its dimensions");
  if (trace) {
    trace->stem.resize(stem_.size());
  }
  nn::Act a = image_to_input(image);
  for (size_t i = 0; i < stem_.size(); ++i) {
    a = stem_[i].forward(store_, a, trace ? &trace->stem[i] : nullptr);
  }
  return a;
}

Eigen::MatrixXf Network::decode_heatmaps(const nn::Act& s0, const nn::Act& s1, const nn::Act& latent, Trace* trace)
    const {
  nn::Act u1 = nn::upsample2x(lat1_.forward(store_, latent, trace ? &trace->lat1 : nullptr));
  u1.m += s1.m;
  const nn::Act y1 = dec1_.forward(store_, u1, trace ? &trace->dec1 : nullptr);
  nn::Act u0 = nn::upsample2x(lat0_.forward(store_, y1, trace ? &trace->lat0 : nullptr));
  u0.m += s0.m;
  const nn::Act y0 = dec0_.forward(store_, u0, trace ? &trace->dec0 : nullptr);
  return head_.forward(store_, y0, trace ? &trace->head : nullptr).m;
}

std::pair<Heatmap, Latent> Network::forward_2d(const Image& image) const {
  const nn::Act a = encode(image, nullptr);
  const nn::Act s0 = enc0_.forward(store_, a, nullptr);
  const nn::Act s1 = enc1_.forward(store_, down1_.forward(store_, s0, nullptr), nullptr);
  const nn::Act e = enc2a_.forward(store_, down2_.forward(store_, s1, nullptr), nullptr);
  Latent latent{enc2b_.forward(store_, e, nullptr)};
  const Eigen::MatrixXf planes = decode_heatmaps(s0, s1, latent.features, nullptr);
  return {to_heatmap(planes, spec_.heatmap_size), std::move(latent)};
}

DepthPrediction Network::forward_depth(const Latent& latent) const {
  const int expected = spec_.heatmap_size / 4;
  PF_THROW_IF(
      latent.features.channels() != 4 * spec_.width || latent.features.h != expected ||
          latent.features.w != expected || latent.features.m.cols() != static_cast<Eigen::Index>(expected) * expected,
      ErrorKind::InvalidArgument,
      "latent has shape {}x{}x{}, expected {}x{}x{}",
      latent.features.channels(),
      latent.features.h,
      latent.features.w,
      4 * spec_.width,
      expected,
      expected);
  const Eigen::VectorXf pooled = global_max_pool(latent.features.m, nullptr);
  const Eigen::VectorXf z = fc3_.forward(store_, fc2_.forward(store_, fc1_.forward(store_, pooled, nullptr), nullptr), nullptr);
  DepthPrediction out{};
  for (int j = 0; j < kNumJoints; ++j) {
    out[j] = static_cast<double>(z[j]);
  }
  return out;
}

void Network::forward_train(const Image& image, Trace& trace) const {
  const nn::Act a = encode(image, &trace);
  const nn::Act s0 = enc0_.forward(store_, a, &trace.enc0);
  const nn::Act s1 = enc1_.forward(store_, down1_.forward(store_, s0, &trace.down1), &trace.enc1);
  const nn::Act e = enc2a_.forward(store_, down2_.forward(store_, s1, &trace.down2), &trace.enc2a);
  const nn::Act latent = enc2b_.forward(store_, e, &trace.enc2b);
  trace.heatmaps = decode_heatmaps(s0, s1, latent, &trace);
  const Eigen::VectorXf pooled = global_max_pool(latent.m, &trace.pool_argmax);
  trace.depth = fc3_.forward(store_, fc2_.forward(store_, fc1_.forward(store_, pooled, &trace.fc1), &trace.fc2), &trace.fc3);
}

void Network::backward(
    Trace& trace,
    const Eigen::MatrixXf& d_heatmaps,
    const Eigen::VectorXf& d_depth,
    nn::Grads& grads) const {
  PF_THROW_IF(
      d_heatmaps.rows() != kNumJoints || d_heatmaps.cols() != trace.heatmaps.cols() || d_depth.size() != kNumJoints,
      ErrorKind::InvalidArgument,
      "gradient shapes do not match the forward pass");
  nn::Act d;
  d.h = spec_.heatmap_size;
  d.w = spec_.heatmap_size;
  d.m = d_heatmaps;

  nn::Act dy0 = head_.backward(store_, grads, trace.head, d, true);
  nn::Act du0 = dec0_.backward(store_, grads, trace.dec0, dy0, true);
  nn::Act ds0_skip = du0;
  nn::Act dt0 = nn::upsample2x_backward(du0);
  nn::Act dy1 = lat0_.backward(store_, grads, trace.lat0, dt0, true);
  nn::Act du1 = dec1_.backward(store_, grads, trace.dec1, dy1, true);
  nn::Act ds1_skip = du1;
  nn::Act dt1 = nn::upsample2x_backward(du1);
  nn::Act dlatent = lat1_.backward(store_, grads, trace.lat1, dt1, true);

  const Eigen::VectorXf dh2 = fc3_.backward(store_, grads, trace.fc3, d_depth);
  const Eigen::VectorXf dh1 = fc2_.backward(store_, grads, trace.fc2, dh2);
  const Eigen::VectorXf dpooled = fc1_.backward(store_, grads, trace.fc1, dh1);
  for (Eigen::Index c = 0; c < dpooled.size(); ++c) {
    dlatent.m(c, trace.pool_argmax[static_cast<size_t>(c)]) += dpooled[c];
  }

  nn::Act de = enc2b_.backward(store_, grads, trace.enc2b, dlatent, true);
  nn::Act dd2 = enc2a_.backward(store_, grads, trace.enc2a, de, true);
  nn::Act ds1 = down2_.backward(store_, grads, trace.down2, dd2, true);
  ds1.m += ds1_skip.m;
  nn::Act dd1 = enc1_.backward(store_, grads, trace.enc1, ds1, true);
  nn::Act ds0 = down1_.backward(store_, grads, trace.down1, dd1, true);
  ds0.m += ds0_skip.m;
  nn::Act da = enc0_.backward(store_, grads, trace.enc0, ds0, true);
  for (size_t i = stem_.size(); i-- > 0;) {
    da = stem_[i].backward(store_, grads, trace.stem[i], da, i > 0);
  }
}

uint64_t Network::architecture_digest() const {
  uint64_t h = fnv1a(spec_.to_json().dump());
  for (const auto& p : store_.params()) {
    h = fnv1a(p.name, h);
    for (int d : p.dims) {
      h = fnv1a(std::to_string(d) + ",", h);
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Prediction assembly

Pose3D assemble_prediction(const Heatmap& heatmaps, const DepthPrediction& depth, int stride, Decode decode) {
  PF_THROW_IF(
      heatmaps.joints != kNumJoints, ErrorKind::InvalidArgument, "expected {} heatmaps", kNumJoints);
  Pose3D pose;
  pose.frame = Frame::ImageScaled;
  pose.visible = all_visible();
  for (int j = 0; j < kNumJoints; ++j) {
    Eigen::Vector2d xy;
    if (decode == Decode::Argmax) {
      xy = decode_heatmap_argmax(heatmaps, j).cast<double>();
    } else {
      xy = decode_heatmap_soft(heatmaps, j, kSoftDecodeTemperature);
    }
    pose.coords[j] = Eigen::Vector3d(xy.x() * stride, xy.y() * stride, depth[j] - depth[kRootJoint]);
  }
  return pose;
}

Pose3D predict_pose3d(const Network& network, const Image& image, Decode decode) {
  auto [heatmaps, latent] = network.forward_2d(image);
  return assemble_prediction(heatmaps, network.forward_depth(latent), network.spec().stride(), decode);
}

Pose3D assemble_geo_pose(const Pose2D& gt_pose2d, const DepthPrediction& pred_depth) {
  Pose3D pose;
  pose.frame = Frame::ImageScaled;
  pose.visible = gt_pose2d.visible;
  for (int j = 0; j < kNumJoints; ++j) {
    pose.coords[j] = Eigen::Vector3d(gt_pose2d.coords[j].x(), gt_pose2d.coords[j].y(), pred_depth[j]);
  }
  return pose;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

constexpr char kMagic[8] = {'P', 'F', 'C', 'K', 'P', 'T', '0', '1'};
constexpr uint32_t kCheckpointVersion = 1;

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const void* data, size_t n) {
    buf_.append(static_cast<const char*>(data), n);
  }
  std::string& buffer() {
    return buf_;
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, const std::filesystem::path& path) : buf_(buf), path_(path) {}

  template <typename T>
  T pod() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<uint32_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void raw(void* dst, size_t n) {
    need(n);
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  size_t pos() const {
    return pos_;
  }

 private:
  void need(size_t n) const {
    PF_THROW_IF(pos_ + n > buf_.size(), ErrorKind::Parse, "{}: truncated checkpoint", path_.string());
  }
  const std::string& buf_;
  const std::filesystem::path& path_;
  size_t pos_ = 0;
};

} // namespace

Checkpoint make_checkpoint(const Network& network, StageTag stage, uint64_t config_digest, nlohmann::json metrics) {
  Checkpoint c;
  c.spec = network.spec();
  c.architecture_digest = network.architecture_digest();
  c.stage_completed = stage;
  c.config_digest = config_digest;
  c.metrics = std::move(metrics);
  c.params = network.store().params();
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod(kCheckpointVersion);
  w.str(c.spec.to_json().dump());
  w.pod(c.architecture_digest);
  w.pod(static_cast<uint32_t>(c.stage_completed));
  w.pod(c.config_digest);
  w.str(c.metrics.dump());
  w.pod(static_cast<uint32_t>(c.params.size()));
  for (const auto& p : c.params) {
    w.str(p.name);
    w.pod(static_cast<uint32_t>(p.dims.size()));
    for (int d : p.dims) {
      w.pod(static_cast<int32_t>(d));
    }
    w.pod(static_cast<uint64_t>(p.value.size()));
    w.raw(p.value.data(), sizeof(float) * static_cast<size_t>(p.value.size()));
  }
  const uint64_t checksum = fnv1a(w.buffer());
  w.pod(checksum);

  std::ofstream out(path, std::ios::binary);
  PF_THROW_IF(!out, ErrorKind::Io, "cannot open {} for writing", path.string());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  PF_THROW_IF(!out, ErrorKind::Io, "failed writing {}", path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  PF_THROW_IF(!in, ErrorKind::Io, "cannot open checkpoint {}", path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PF_THROW_IF(
      buf.size() < sizeof(kMagic) + sizeof(uint64_t) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0,
      ErrorKind::Parse,
      "{}: not a posefuse checkpoint",
      path.string());
  uint64_t stored_sum;
  std::memcpy(&stored_sum, buf.data() + buf.size() - sizeof(uint64_t), sizeof(uint64_t));
  const std::string body = buf.substr(0, buf.size() - sizeof(uint64_t));
  PF_THROW_IF(fnv1a(body) != stored_sum, ErrorKind::Parse, "{}: checksum mismatch", path.string());

  Reader r(body, path);
  char magic[sizeof(kMagic)];
  r.raw(magic, sizeof(magic));
  const auto version = r.pod<uint32_t>();
  PF_THROW_IF(
      version != kCheckpointVersion,
      ErrorKind::Incompatible,
      "{}: checkpoint version {} is not supported",
      path.string(),
      version);
  Checkpoint c;
  try {
    c.spec = NetworkSpec::from_json(nlohmann::json::parse(r.str()));
    c.architecture_digest = r.pod<uint64_t>();
    const auto stage = r.pod<uint32_t>();
    PF_THROW_IF(stage > 3, ErrorKind::Parse, "{}: bad stage tag {}", path.string(), stage);
    c.stage_completed = static_cast<StageTag>(stage);
    c.config_digest = r.pod<uint64_t>();
    c.metrics = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, "{}: {}", path.string(), e.what());
  }
  const auto count = r.pod<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    nn::Param p;
    p.name = r.str();
    const auto ndims = r.pod<uint32_t>();
    PF_THROW_IF(ndims > 8, ErrorKind::Parse, "{}: parameter '{}' has {} dims", path.string(), p.name, ndims);
    Eigen::Index expected = 1;
    for (uint32_t d = 0; d < ndims; ++d) {
      p.dims.push_back(r.pod<int32_t>());
      expected *= p.dims.back();
    }
    const auto n = r.pod<uint64_t>();
    PF_THROW_IF(
        n != static_cast<uint64_t>(expected),
        ErrorKind::Parse,
        "{}: parameter '{}' size does not match its dims",
        path.string(),
        p.name);
    p.value.resize(static_cast<Eigen::Index>(n));
    r.raw(p.value.data(), sizeof(float) * n);
    c.params.push_back(std::move(p));
  }
  PF_THROW_IF(r.pos() != body.size(), ErrorKind::Parse, "{}: trailing bytes", path.string());
  return c;
}

Network network_from_checkpoint(const Checkpoint& c) {
  Network net(c.spec, 0);
  PF_THROW_IF(
      net.architecture_digest() != c.architecture_digest,
      ErrorKind::Incompatible,
      "checkpoint architecture digest {:016x} does not match this build ({:016x})",
      c.architecture_digest,
      net.architecture_digest());
  auto& params = net.store().params();
  PF_THROW_IF(
      params.size() != c.params.size(), ErrorKind::Incompatible, "checkpoint parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    PF_THROW_IF(
        params[i].name != c.params[i].name || params[i].dims != c.params[i].dims,
        ErrorKind::Incompatible,
        "checkpoint parameter '{}' does not match '{}'",
        c.params[i].name,
        params[i].name);
    params[i].value = c.params[i].value;
  }
  return net;
}

} // namespace posefuse
