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

#include "segvar.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "segvar/biasvar.hpp"
#include "segvar/config.hpp"
#include "segvar/metrics.hpp"
#include "segvar/stages.hpp"
#include "segvar/stats.hpp"

struct segvar_config {
  segvar::ExperimentConfig cfg;
};

struct segvar_mask {
  segvar::BinaryMask mask;
};

struct segvar_decomposition {
  segvar::SampleDecomposition dec;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
segvar_status guarded(F&& f) noexcept {
  try {
    f();
    g_last_error.clear();
    return SEGVAR_OK;
  } catch (const segvar::Error& e) {
    g_last_error = e.what();
    return static_cast<segvar_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SEGVAR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SEGVAR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SEGVAR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) segvar::fail(segvar::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* segvar_version(void) { return "1.0.0"; }

const char* segvar_last_error(void) { return g_last_error.c_str(); }

const char* segvar_status_name(segvar_status status) {
  if (status == SEGVAR_OK) return "ok";
  if (status < SEGVAR_INVALID_ARGUMENT || status > SEGVAR_INTERNAL) return "unknown";
  return segvar::to_string(static_cast<segvar::ErrorCode>(status));
}

segvar_status segvar_config_new(segvar_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new segvar_config{};
  });
}

segvar_status segvar_config_load(const char* path, segvar_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto cfg = segvar::load_config(path);
    *out = new segvar_config{std::move(cfg)};
  });
}

segvar_status segvar_config_set(segvar_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

segvar_status segvar_config_validate(const segvar_config* cfg) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->cfg.validate();
  });
}

segvar_status segvar_config_hash(const segvar_config* cfg, char* buf, size_t size) {
  return guarded([&] {
    need(cfg, "cfg");
    need(buf, "buf");
    const std::string h = cfg->cfg.hash();
    segvar::require(size > h.size(), segvar::ErrorCode::InvalidArgument, "hash buffer too small");
    std::memcpy(buf, h.c_str(), h.size() + 1);
  });
}

void segvar_config_free(segvar_config* cfg) { delete cfg; }

segvar_status segvar_run_stage(const segvar_config* cfg, const char* stage, const segvar_stage_options* options) {
  return guarded([&] {
    need(cfg, "cfg");
    need(stage, "stage");
    need(options, "options");
    need(options->root, "options->root");
    segvar::StageOptions opt;
    opt.root = options->root;
    if (options->input != nullptr) opt.input = std::filesystem::path(options->input);
    opt.cv = options->cv != 0;
    opt.montage = options->montage != 0;
    segvar::run_stage(stage, cfg->cfg, opt);
  });
}

segvar_status segvar_mask_new(int width, int height, const uint8_t* pixels, segvar_mask** out) {
  return guarded([&] {
    need(out, "out");
    segvar::require(width >= 0 && height >= 0, segvar::ErrorCode::InvalidArgument, "negative mask size");
    auto m = new segvar_mask{segvar::BinaryMask(width, height)};
    if (pixels != nullptr)
      for (std::size_t i = 0; i < m->mask.size(); ++i) m->mask[i] = pixels[i] ? 1 : 0;
    *out = m;
  });
}

segvar_status segvar_mask_load(const char* path, segvar_mask** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto m = segvar::load_mask(path);
    *out = new segvar_mask{std::move(m)};
  });
}

segvar_status segvar_mask_save(const segvar_mask* mask, const char* path) {
  return guarded([&] {
    need(mask, "mask");
    need(path, "path");
    segvar::save_pnm(mask->mask, path);
  });
}

int segvar_mask_width(const segvar_mask* mask) { return mask ? mask->mask.width() : 0; }
int segvar_mask_height(const segvar_mask* mask) { return mask ? mask->mask.height() : 0; }
const uint8_t* segvar_mask_pixels(const segvar_mask* mask) { return mask ? mask->mask.data().data() : nullptr; }
void segvar_mask_free(segvar_mask* mask) { delete mask; }

segvar_status segvar_confusion_counts(const segvar_mask* pred, const segvar_mask* truth, segvar_confusion* out) {
  return guarded([&] {
    need(pred, "pred");
    need(truth, "truth");
    need(out, "out");
    const auto c = segvar::confusion(pred->mask, truth->mask);
    *out = {c.tp, c.fp, c.tn, c.fn};
  });
}

segvar_status segvar_dsc(const segvar_mask* pred, const segvar_mask* truth, double* out) {
  return guarded([&] {
    need(pred, "pred");
    need(truth, "truth");
    need(out, "out");
    *out = segvar::dsc(segvar::confusion(pred->mask, truth->mask));
  });
}

segvar_status segvar_sensitivity(const segvar_mask* pred, const segvar_mask* truth, double* out) {
  return guarded([&] {
    need(pred, "pred");
    need(truth, "truth");
    need(out, "out");
    *out = segvar::sensitivity(segvar::confusion(pred->mask, truth->mask));
  });
}

segvar_status segvar_specificity(const segvar_mask* pred, const segvar_mask* truth, double* out) {
  return guarded([&] {
    need(pred, "pred");
    need(truth, "truth");
    need(out, "out");
    *out = segvar::specificity(segvar::confusion(pred->mask, truth->mask));
  });
}

segvar_status segvar_decompose(const segvar_mask* truth, const segvar_mask* const* predictions, size_t n,
                               segvar_decomposition** out) {
  return guarded([&] {
    need(truth, "truth");
    need(out, "out");
    segvar::require(n == 0 || predictions != nullptr, segvar::ErrorCode::InvalidArgument, "predictions is null");
    std::vector<segvar::BinaryMask> preds;
    for (size_t i = 0; i < n; ++i) {
      need(predictions[i], "prediction");
      preds.push_back(predictions[i]->mask);
    }
    auto dec = segvar::decompose_sample(truth->mask, segvar::PredictionEnsemble("sample", std::move(preds)));
    *out = new segvar_decomposition{std::move(dec)};
  });
}

int segvar_decomposition_ensemble_size(const segvar_decomposition* d) { return d ? d->dec.maps.ensemble_size : 0; }

segvar_status segvar_decomposition_expectations(const segvar_decomposition* d, segvar_region region,
                                                segvar_expectations* out) {
  return guarded([&] {
    need(d, "decomposition");
    need(out, "out");
    const auto& s = d->dec.expectations;
    std::optional<segvar::Expectations> e;
    switch (region) {
      case SEGVAR_REGION_POSITIVE: e = s.positive; break;
      case SEGVAR_REGION_NEGATIVE: e = s.negative; break;
      case SEGVAR_REGION_TOTAL: e = s.total; break;
      default: segvar::fail(segvar::ErrorCode::InvalidArgument, "unknown region");
    }
    if (!e) segvar::fail(segvar::ErrorCode::EmptyInput, "region has no pixels");
    *out = {e->bias, e->variance, e->signed_variance, e->loss};
  });
}

const uint16_t* segvar_decomposition_variance_counts(const segvar_decomposition* d) {
  return d ? d->dec.maps.variance_count.data() : nullptr;
}
const uint16_t* segvar_decomposition_loss_counts(const segvar_decomposition* d) {
  return d ? d->dec.maps.loss_count.data() : nullptr;
}
const uint8_t* segvar_decomposition_main(const segvar_decomposition* d) {
  return d ? d->dec.maps.main.data().data() : nullptr;
}
const uint8_t* segvar_decomposition_bias(const segvar_decomposition* d) {
  return d ? d->dec.maps.bias.data().data() : nullptr;
}
void segvar_decomposition_free(segvar_decomposition* d) { delete d; }

segvar_status segvar_paired_t_test(const double* a, const double* b, size_t n, segvar_ttest* out) {
  return guarded([&] {
    need(out, "out");
    segvar::require(n == 0 || (a != nullptr && b != nullptr), segvar::ErrorCode::InvalidArgument,
                    "sample arrays are null");
    const auto r = segvar::paired_t_test(std::span<const double>(a, n), std::span<const double>(b, n));
    *out = {r.t, r.df, r.p, r.n};
  });
}

}  // extern "C"
