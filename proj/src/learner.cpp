// Copyright 2026 The segvar Authors
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

#include "segvar/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "fileio.hpp"

namespace segvar {

const char* to_string(Task t) noexcept { return t == Task::Tumor ? "tumor" : "rectum"; }

const char* to_string(NetKind k) noexcept {
  switch (k) {
    case NetKind::SrsnTumor: return "srsn-tumor";
    case NetKind::SrsnRectum: return "srsn-rectum";
    case NetKind::Mrsn: return "mrsn";
  }
  return "unknown";
}

Task task_from_string(const std::string& s) {
  if (s == "tumor") return Task::Tumor;
  if (s == "rectum") return Task::Rectum;
  fail(ErrorCode::InvalidArgument, "unknown task '" + s + "'");
}

NetKind net_kind_from_string(const std::string& s) {
  if (s == "srsn-tumor") return NetKind::SrsnTumor;
  if (s == "srsn-rectum") return NetKind::SrsnRectum;
  if (s == "mrsn") return NetKind::Mrsn;
  fail(ErrorCode::InvalidArgument, "unknown network kind '" + s + "'");
}

std::vector<Task> tasks_of(NetKind k) {
  switch (k) {
    case NetKind::SrsnTumor: return {Task::Tumor};
    case NetKind::SrsnRectum: return {Task::Rectum};
    case NetKind::Mrsn: return {Task::Tumor, Task::Rectum};
  }
  return {};
}

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorCode::Config, "train.batch_size must be >= 1");
  require(epochs >= 0, ErrorCode::Config, "train.epochs must be >= 0");
  require(threshold > 0.0 && threshold < 1.0, ErrorCode::Config, "train.threshold must be in (0,1)");
  require(channels >= 1, ErrorCode::Config, "train.channels must be >= 1");
  require(adam.learning_rate >= 0.0, ErrorCode::Config, "train.learning_rate must be >= 0");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0,
          ErrorCode::Config, "adam betas must be in [0,1)");
  require(adam.epsilon > 0.0, ErrorCode::Config, "adam epsilon must be > 0");
  require(tumor_weight >= 0.0 && rectum_weight >= 0.0, ErrorCode::Config, "task weights must be >= 0");
}

double TrainConfig::learning_rate_at(std::uint64_t step, std::uint64_t total_steps) const {
  if (!cosine_decay || total_steps == 0) return adam.learning_rate;
  const double t = static_cast<double>(std::min(step, total_steps)) / static_cast<double>(total_steps);
  return adam.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s,
               const AdamConfig& cfg) {
  require(params.size() == grads.size() && s.m.size() == params.size() && s.v.size() == params.size(),
          ErrorCode::ShapeMismatch, "adam_step: parameter, gradient and state sizes differ");
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * grads[i];
    s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

double he_normal(int fan_in, Rng& rng) {
  require(fan_in >= 1, ErrorCode::InvalidArgument, "fan_in must be >= 1");
  return rng.normal(0.0, std::sqrt(2.0 / fan_in));
}

double glorot_uniform(int fan_in, int fan_out, Rng& rng) {
  require(fan_in >= 1 && fan_out >= 1, ErrorCode::InvalidArgument, "fans must be >= 1");
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  return rng.uniform(-bound, bound);
}

void init_he_normal(std::span<double> out, int fan_in, Rng& rng) {
  for (double& v : out) v = he_normal(fan_in, rng);
}

void init_glorot_uniform(std::span<double> out, int fan_in, int fan_out, Rng& rng) {
  for (double& v : out) v = glorot_uniform(fan_in, fan_out, rng);
}

namespace {

struct DscSums {
  double pg = 0.0, pp = 0.0, gg = 0.0;
};

DscSums dsc_sums(std::span<const double> p, std::span<const std::uint8_t> g) {
  require(p.size() == g.size(), ErrorCode::ShapeMismatch, "dsc loss: prediction and truth sizes differ");
  DscSums s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s.pg += p[i] * g[i];
    s.pp += p[i] * p[i];
    s.gg += g[i];
  }
  return s;
}

// d/dp_i of -(2 pg + e) / (pp + gg + e) = -(2 g_i Q - 2 p_i N) / Q^2.
template <typename Out>
void dsc_grad_into(std::span<const double> p, std::span<const std::uint8_t> g, const DscSums& s,
                   double scale, Out&& out) {
  const double num = 2.0 * s.pg + kDscSmoothing;
  const double den = s.pp + s.gg + kDscSmoothing;
  const double inv = 1.0 / (den * den);
  for (std::size_t i = 0; i < p.size(); ++i)
    out(i, scale * -(2.0 * g[i] * den - 2.0 * p[i] * num) * inv);
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Shared-stage activations of one image.
struct SharedStage {
  int w = 0, h = 0;
  std::vector<double> padded;  // (h+2) x (w+2), zero border
  std::vector<double> act;     // channels x (w*h), post-rectifier
};

void run_shared(const ToyNet& net, const ValueMap& in, SharedStage& st) {
  require(!in.empty(), ErrorCode::InvalidArgument, "forward on an empty image");
  const int w = in.width(), h = in.height(), pw = w + 2;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  st.w = w;
  st.h = h;
  st.padded.assign(static_cast<std::size_t>(pw) * (h + 2), 0.0);
  for (int y = 0; y < h; ++y)
    std::copy_n(&in[static_cast<std::size_t>(y) * w], w, &st.padded[static_cast<std::size_t>(y + 1) * pw + 1]);
  const int C = net.channels();
  st.act.resize(static_cast<std::size_t>(C) * n);
  const auto params = net.params();
  for (int c = 0; c < C; ++c) {
    double* z = &st.act[static_cast<std::size_t>(c) * n];
    std::fill_n(z, n, params[static_cast<std::size_t>(C) * 9 + c]);
    for (int k = 0; k < 9; ++k) {
      const double wk = params[static_cast<std::size_t>(c) * 9 + k];
      const int ky = k / 3, kx = k % 3;
      for (int y = 0; y < h; ++y) {
        const double* src = &st.padded[static_cast<std::size_t>(y + ky) * pw + kx];
        double* dst = z + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) dst[x] += wk * src[x];
      }
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = std::max(z[i], 0.0);
  }
}

void run_head(const ToyNet& net, std::span<const double> head, const SharedStage& st,
              std::vector<double>& prob) {
  const std::size_t n = static_cast<std::size_t>(st.w) * st.h;
  const int C = net.channels();
  prob.assign(n, head[static_cast<std::size_t>(C)]);
  for (int c = 0; c < C; ++c) {
    const double wc = head[static_cast<std::size_t>(c)];
    const double* a = &st.act[static_cast<std::size_t>(c) * n];
    for (std::size_t i = 0; i < n; ++i) prob[i] += wc * a[i];
  }
  for (double& v : prob) v = sigmoid(v);
}

}  // namespace

double dsc_loss(std::span<const double> p, std::span<const std::uint8_t> g) {
  const auto s = dsc_sums(p, g);
  return -(2.0 * s.pg + kDscSmoothing) / (s.pp + s.gg + kDscSmoothing);
}

double dsc_loss(const ValueMap& p, const BinaryMask& g) {
  require(p.same_shape(g), ErrorCode::ShapeMismatch, "dsc loss: shape mismatch");
  return dsc_loss(p.pixels(), g.pixels());
}

std::vector<double> dsc_loss_grad(std::span<const double> p, std::span<const std::uint8_t> g) {
  const auto s = dsc_sums(p, g);
  std::vector<double> out(p.size());
  dsc_grad_into(p, g, s, 1.0, [&](std::size_t i, double v) { out[i] = v; });
  return out;
}

ValueMap dsc_loss_grad(const ValueMap& p, const BinaryMask& g) {
  require(p.same_shape(g), ErrorCode::ShapeMismatch, "dsc loss: shape mismatch");
  return ValueMap(p.width(), p.height(), dsc_loss_grad(p.pixels(), g.pixels()));
}

ToyNet::ToyNet(NetKind kind, int channels) : kind_(kind), channels_(channels), tasks_(tasks_of(kind)) {
  require(channels >= 1, ErrorCode::InvalidArgument, "channels must be >= 1");
  params_.assign(static_cast<std::size_t>(channels) * 10 + tasks_.size() * (channels + 1), 0.0);
}

ToyNet ToyNet::initialized(NetKind kind, int channels, Rng& rng) {
  ToyNet net(kind, channels);
  for (int c = 0; c < channels; ++c) init_he_normal(net.shared_weights(c), 9, rng);
  for (Task t : {Task::Tumor, Task::Rectum})
    if (net.has_task(t)) init_he_normal(net.head_weights(t), channels, rng);
  return net;
}

bool ToyNet::has_task(Task t) const noexcept {
  return std::find(tasks_.begin(), tasks_.end(), t) != tasks_.end();
}

std::size_t ToyNet::head_base(Task t) const {
  const auto it = std::find(tasks_.begin(), tasks_.end(), t);
  require(it != tasks_.end(), ErrorCode::InvalidArgument,
          std::string("network has no '") + to_string(t) + "' head");
  const auto idx = static_cast<std::size_t>(it - tasks_.begin());
  return static_cast<std::size_t>(channels_) * 10 + idx * (channels_ + 1);
}

std::span<double> ToyNet::shared_weights(int c) {
  return std::span<double>(params_).subspan(static_cast<std::size_t>(c) * 9, 9);
}

double& ToyNet::shared_offset(int c) { return params_[static_cast<std::size_t>(channels_) * 9 + c]; }

std::span<double> ToyNet::head_weights(Task t) {
  return std::span<double>(params_).subspan(head_base(t), static_cast<std::size_t>(channels_));
}

double& ToyNet::head_offset(Task t) { return params_[head_base(t) + channels_]; }

std::vector<ValueMap> ToyNet::forward(const ValueMap& input) const {
  SharedStage st;
  run_shared(*this, input, st);
  std::vector<ValueMap> out;
  std::vector<double> prob;
  for (Task t : tasks_) {
    run_head(*this, params().subspan(head_base(t), channels_ + 1), st, prob);
    out.emplace_back(input.width(), input.height(), prob);
  }
  return out;
}

ValueMap ToyNet::forward(const ValueMap& input, Task t) const {
  const auto base = head_base(t);
  SharedStage st;
  run_shared(*this, input, st);
  std::vector<double> prob;
  run_head(*this, params().subspan(base, channels_ + 1), st, prob);
  return ValueMap(input.width(), input.height(), std::move(prob));
}

double loss_and_grad(const ToyNet& net, const ValueMap& input, const TaskTargets& targets,
                     double tumor_weight, double rectum_weight, std::span<double> grad) {
  require(grad.size() == net.param_count(), ErrorCode::ShapeMismatch, "gradient buffer size mismatch");
  // Scratch buffers are reused across calls on the same thread.
  thread_local SharedStage st;
  thread_local std::vector<double> dact, prob, dz;
  run_shared(net, input, st);
  const int C = net.channels();
  const int w = st.w, h = st.h, pw = w + 2;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  dact.assign(static_cast<std::size_t>(C) * n, 0.0);
  dz.resize(n);
  double loss = 0.0;
  const auto params = net.params();
  const std::size_t head0 = static_cast<std::size_t>(C) * 10;

  for (std::size_t ti = 0; ti < net.tasks().size(); ++ti) {
    const Task t = net.tasks()[ti];
    const BinaryMask* g = t == Task::Tumor ? targets.tumor : targets.rectum;
    require(g != nullptr, ErrorCode::InvalidArgument, std::string("missing ") + to_string(t) + " mask");
    require(g->same_shape(input), ErrorCode::ShapeMismatch, "target mask shape differs from input");
    const double weight = t == Task::Tumor ? tumor_weight : rectum_weight;
    const std::size_t base = head0 + ti * (C + 1);
    const auto head = params.subspan(base, C + 1);
    run_head(net, head, st, prob);
    const auto sums = dsc_sums(prob, g->pixels());
    loss += weight * -(2.0 * sums.pg + kDscSmoothing) / (sums.pp + sums.gg + kDscSmoothing);
    dsc_grad_into(prob, g->pixels(), sums, weight,
                  [&](std::size_t i, double dp) { dz[i] = dp * prob[i] * (1.0 - prob[i]); });
    double db = 0.0;
    for (std::size_t i = 0; i < n; ++i) db += dz[i];
    grad[base + C] += db;
    for (int c = 0; c < C; ++c) {
      const double* a = &st.act[static_cast<std::size_t>(c) * n];
      double* da = &dact[static_cast<std::size_t>(c) * n];
      const double wc = head[c];
      double dw = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dw += dz[i] * a[i];
        da[i] += wc * dz[i];
      }
      grad[base + c] += dw;
    }
  }

  for (int c = 0; c < C; ++c) {
    const double* a = &st.act[static_cast<std::size_t>(c) * n];
    double* d = &dact[static_cast<std::size_t>(c) * n];
    double db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = a[i] > 0.0 ? d[i] : 0.0;
      db += d[i];
    }
    grad[static_cast<std::size_t>(C) * 9 + c] += db;
    for (int k = 0; k < 9; ++k) {
      const int ky = k / 3, kx = k % 3;
      double acc = 0.0;
      for (int y = 0; y < h; ++y) {
        const double* src = &st.padded[static_cast<std::size_t>(y + ky) * pw + kx];
        const double* dd = d + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) acc += dd[x] * src[x];
      }
      grad[static_cast<std::size_t>(c) * 9 + k] += acc;
    }
  }
  return loss;
}

ToyNet train(NetKind kind, std::span<const SegItem> data, const TrainConfig& cfg,
             const AugmentConfig* augment, TrainLog* log) {
  cfg.validate();
  require(!data.empty(), ErrorCode::EmptyInput, "training set is empty");
  for (const auto& it : data) {
    require(!it.image.empty(), ErrorCode::InvalidArgument, "training sample without an image");
    require(!it.rectum.empty() && !it.tumor.empty(), ErrorCode::MissingArtifact, "training sample without masks");
    require(it.rectum.same_shape(it.image) && it.tumor.same_shape(it.image), ErrorCode::ShapeMismatch,
            "training image and masks differ in resolution");
  }
  if (augment != nullptr) augment->validate();

  Rng init_rng(derive_seed(cfg.seed, 1));
  ToyNet net = ToyNet::initialized(kind, cfg.channels, init_rng);
  Rng order_rng(derive_seed(cfg.seed, 2));

  std::vector<ValueMap> inputs;
  if (augment == nullptr) {
    inputs.reserve(data.size());
    for (const auto& it : data) inputs.push_back(normalized(it.image));
  }

  AdamState state(net.param_count());
  std::vector<double> grad(net.param_count());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  std::uint64_t batch_counter = 0;
  const std::uint64_t total_steps =
      static_cast<std::uint64_t>(cfg.epochs) * ((data.size() + bs - 1) / bs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++batch_counter) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      if (augment != nullptr) {
        Batch b;
        for (std::size_t i = start; i < end; ++i) b.push_back(data[order[i]]);
        Rng batch_rng(derive_seed(cfg.seed ^ 0xa6a6a6a6ULL, batch_counter));
        b = augment_pipeline(b, batch_rng, *augment);
        for (const auto& it : b)
          batch_loss += loss_and_grad(net, normalized(it.image), {&it.tumor, &it.rectum},
                                      cfg.tumor_weight, cfg.rectum_weight, grad);
      } else {
        for (std::size_t i = start; i < end; ++i) {
          const auto& it = data[order[i]];
          batch_loss += loss_and_grad(net, inputs[order[i]], {&it.tumor, &it.rectum},
                                      cfg.tumor_weight, cfg.rectum_weight, grad);
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= inv;
      AdamConfig step_cfg = cfg.adam;
      step_cfg.learning_rate = cfg.learning_rate_at(state.step, total_steps);
      adam_step(net.params(), grad, state, step_cfg);
      epoch_loss += batch_loss;
    }
    if (log != nullptr) log->epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return net;
}

BinaryMask predict_mask(const ToyNet& net, const GrayImage& img, Task task, double threshold) {
  const ValueMap prob = net.forward(normalized(img), task);
  BinaryMask out(img.width(), img.height());
  for (std::size_t i = 0; i < prob.size(); ++i) out[i] = prob[i] > threshold ? 1 : 0;
  return out;
}

void save_model(const ToyNet& net, const ModelMeta& meta, const std::filesystem::path& path) {
  std::string bytes;
  bytes.reserve(net.param_count() * 8);
  for (double v : net.params()) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
  }
  detail::write_text(path, bytes);

  nlohmann::ordered_json j;
  j["format"] = "segvar-toynet-v1";
  j["kind"] = to_string(net.kind());
  j["channels"] = net.channels();
  std::vector<std::string> tasks;
  for (Task t : net.tasks()) tasks.emplace_back(to_string(t));
  j["tasks"] = tasks;
  j["param_count"] = net.param_count();
  j["layout"] = {{"shared_weights", {net.channels(), 3, 3}},
                 {"shared_offsets", {net.channels()}},
                 {"head_weights", {net.channels()}},
                 {"head_offset", {1}}};
  j["dtype"] = "float64-le";
  j["seed"] = meta.seed;
  j["config_hash"] = meta.config_hash;
  j["label"] = meta.label;
  detail::write_text(path.string() + ".json", j.dump(2) + "\n");
}

ToyNet load_model(const std::filesystem::path& path, ModelMeta* meta) {
  const auto side = nlohmann::json::parse(detail::read_text(path.string() + ".json"), nullptr, false);
  if (side.is_discarded() || !side.is_object())
    fail(ErrorCode::Format, "malformed model sidecar " + path.string() + ".json");
  try {
    ToyNet net(net_kind_from_string(side.at("kind").get<std::string>()), side.at("channels").get<int>());
    const std::string bytes = detail::read_text(path);
    require(bytes.size() == net.param_count() * 8 && side.at("param_count").get<std::size_t>() == net.param_count(),
            ErrorCode::Format, "model file size does not match its sidecar: " + path.string());
    auto params = net.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      std::uint64_t u = 0;
      for (int b = 0; b < 8; ++b)
        u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
      params[i] = std::bit_cast<double>(u);
    }
    if (meta != nullptr) {
      meta->seed = side.value("seed", std::uint64_t{0});
      meta->config_hash = side.value("config_hash", std::string{});
      meta->label = side.value("label", std::string{});
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, "malformed model sidecar " + path.string() + ".json: " + e.what());
  }
}

}  // namespace segvar
