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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segvar/augment.hpp"
#include "segvar/image.hpp"
#include "segvar/random.hpp"

namespace segvar {

enum class Task : int { Tumor = 0, Rectum = 1 };

/// Network topologies. Srsn* carry one head; Mrsn carries tumor and rectum
/// heads over one shared stage.
enum class NetKind : int { SrsnTumor = 0, SrsnRectum = 1, Mrsn = 2 };

const char* to_string(Task t) noexcept;
const char* to_string(NetKind k) noexcept;
Task task_from_string(const std::string& s);
NetKind net_kind_from_string(const std::string& s);
std::vector<Task> tasks_of(NetKind k);

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  AdamConfig adam;
  int batch_size = 20;
  int epochs = 30;
  std::uint64_t seed = 0;
  double tumor_weight = 1.0;
  double rectum_weight = 1.0;
  double threshold = 0.5;
  int channels = 8;
  /// Cosine decay of the learning rate to zero over all steps; constant when off.
  bool cosine_decay = false;

  void validate() const;
  /// Learning rate for 0-based optimizer step `step` of `total_steps`.
  double learning_rate_at(std::uint64_t step, std::uint64_t total_steps) const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update of `params` in place; increments state.step.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);

/// One N(0, 2/fan_in) draw.
double he_normal(int fan_in, Rng& rng);
/// One U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))) draw.
double glorot_uniform(int fan_in, int fan_out, Rng& rng);
void init_he_normal(std::span<double> out, int fan_in, Rng& rng);
void init_glorot_uniform(std::span<double> out, int fan_in, int fan_out, Rng& rng);

inline constexpr double kDscSmoothing = 1e-7;

/// Smoothed DSC loss -(2*sum(p*g) + eps) / (sum(p^2) + sum(g^2) + eps), in [-1, 0].
double dsc_loss(std::span<const double> p, std::span<const std::uint8_t> g);
double dsc_loss(const ValueMap& p, const BinaryMask& g);
/// Exact gradient of dsc_loss with respect to each p_i.
std::vector<double> dsc_loss_grad(std::span<const double> p, std::span<const std::uint8_t> g);
ValueMap dsc_loss_grad(const ValueMap& p, const BinaryMask& g);

/// Shared stage of `channels` 3x3 same-padded filters with rectifier, then one
/// 1x1 sigmoid head per task. Parameters live in one flat vector:
///   [shared weights (C*9) | shared offsets (C) | per head: weights (C), offset]
/// with heads in tasks_of(kind) order.
class ToyNet {
 public:
  ToyNet(NetKind kind, int channels);

  /// He-normal weights drawn in layout order (shared stage, then heads in
  /// tumor, rectum order); all offsets zero.
  static ToyNet initialized(NetKind kind, int channels, Rng& rng);

  NetKind kind() const noexcept { return kind_; }
  int channels() const noexcept { return channels_; }
  const std::vector<Task>& tasks() const noexcept { return tasks_; }
  bool has_task(Task t) const noexcept;

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  std::span<double> shared_weights(int c);
  double& shared_offset(int c);
  std::span<double> head_weights(Task t);
  double& head_offset(Task t);

  /// Per-task probability maps in tasks() order; input values in [0,1].
  std::vector<ValueMap> forward(const ValueMap& input) const;
  ValueMap forward(const ValueMap& input, Task t) const;

  friend bool operator==(const ToyNet&, const ToyNet&) = default;

 private:
  std::size_t head_base(Task t) const;

  NetKind kind_;
  int channels_;
  std::vector<Task> tasks_;
  std::vector<double> params_;
};

/// Targets for one image; a task absent from the net is ignored.
struct TaskTargets {
  const BinaryMask* tumor = nullptr;
  const BinaryMask* rectum = nullptr;
};

/// Weighted sum of per-task DSC losses for one image; accumulates d(loss)/d(params)
/// into grad (which must have param_count() entries).
double loss_and_grad(const ToyNet& net, const ValueMap& input, const TaskTargets& targets,
                     double tumor_weight, double rectum_weight, std::span<double> grad);

struct TrainLog {
  std::vector<double> epoch_loss;  // mean per-image loss over each epoch
};

/// Trains one model. Mini-batches are drawn from a per-epoch shuffle; with
/// `augment` set, every mini-batch goes through augment_pipeline first.
/// Bit-deterministic for a given (kind, data, cfg, augment).
ToyNet train(NetKind kind, std::span<const SegItem> data, const TrainConfig& cfg,
             const AugmentConfig* augment = nullptr, TrainLog* log = nullptr);

/// Pixel is 1 iff the task's probability > threshold.
BinaryMask predict_mask(const ToyNet& net, const GrayImage& img, Task task, double threshold);

/// Anything that can produce a binary segmentation for an image.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual bool has_task(Task t) const = 0;
  virtual BinaryMask predict(const GrayImage& img, Task t) const = 0;
};

class NetSegmenter final : public Segmenter {
 public:
  NetSegmenter(ToyNet net, double threshold) : net_(std::move(net)), threshold_(threshold) {}
  bool has_task(Task t) const override { return net_.has_task(t); }
  BinaryMask predict(const GrayImage& img, Task t) const override {
    return predict_mask(net_, img, t, threshold_);
  }
  const ToyNet& net() const noexcept { return net_; }

 private:
  ToyNet net_;
  double threshold_;
};

struct ModelMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string label;  // free-form, e.g. "mrsn-aug/set3"
};

/// Little-endian float64 parameter file plus a JSON sidecar at path + ".json".
void save_model(const ToyNet& net, const ModelMeta& meta, const std::filesystem::path& path);
ToyNet load_model(const std::filesystem::path& path, ModelMeta* meta = nullptr);

}  // namespace segvar
