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

/* C interface to the segvar toolkit. All objects are opaque handles owned by
 * the caller and released with the matching *_free function. Every function
 * returning segvar_status reports failures through its return value; the
 * message of the last failure on the calling thread is available from
 * segvar_last_error(). */
#ifndef SEGVAR_H
#define SEGVAR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SEGVAR_API __declspec(dllexport)
#else
#define SEGVAR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum segvar_status {
  SEGVAR_OK = 0,
  SEGVAR_INVALID_ARGUMENT = 1,
  SEGVAR_IO = 2,
  SEGVAR_FORMAT = 3,
  SEGVAR_SHAPE_MISMATCH = 4,
  SEGVAR_OUT_OF_BOUNDS = 5,
  SEGVAR_DUPLICATE_ID = 6,
  SEGVAR_MISSING_KEY = 7,
  SEGVAR_EMPTY_INPUT = 8,
  SEGVAR_DEGENERATE_WINDOW = 9,
  SEGVAR_DEGENERATE_VARIANCE = 10,
  SEGVAR_EVEN_ENSEMBLE = 11,
  SEGVAR_MISSING_ARTIFACT = 12,
  SEGVAR_CONFIG = 13,
  SEGVAR_INTERNAL = 14
} segvar_status;

typedef struct segvar_config segvar_config;
typedef struct segvar_mask segvar_mask;
typedef struct segvar_decomposition segvar_decomposition;

typedef struct segvar_expectations {
  double bias;
  double variance;
  double signed_variance;
  double loss;
} segvar_expectations;

typedef enum segvar_region { SEGVAR_REGION_POSITIVE = 0, SEGVAR_REGION_NEGATIVE = 1, SEGVAR_REGION_TOTAL = 2 } segvar_region;

typedef struct segvar_confusion {
  uint64_t tp, fp, tn, fn;
} segvar_confusion;

typedef struct segvar_ttest {
  double t;
  double df;
  double p;
  size_t n;
} segvar_ttest;

typedef struct segvar_stage_options {
  const char* root;  /* output root directory */
  const char* input; /* optional upstream directory override, may be NULL */
  int cv;            /* train: cross-validation folds */
  int montage;       /* render: tile ensemble predictions */
} segvar_stage_options;

SEGVAR_API const char* segvar_version(void);
SEGVAR_API const char* segvar_last_error(void);
/* Stable snake_case name of a status, e.g. "even_ensemble". */
SEGVAR_API const char* segvar_status_name(segvar_status status);

/* Configuration */
SEGVAR_API segvar_status segvar_config_new(segvar_config** out);
SEGVAR_API segvar_status segvar_config_load(const char* path, segvar_config** out);
SEGVAR_API segvar_status segvar_config_set(segvar_config* cfg, const char* key, const char* value);
SEGVAR_API segvar_status segvar_config_validate(const segvar_config* cfg);
/* Writes the 16-hex-digit config hash plus NUL into buf (size >= 17). */
SEGVAR_API segvar_status segvar_config_hash(const segvar_config* cfg, char* buf, size_t size);
SEGVAR_API void segvar_config_free(segvar_config* cfg);

/* Pipeline stages: "synth", "preprocess", "split", "train", "predict",
 * "biasvar", "evaluate", "render", "pipeline". */
SEGVAR_API segvar_status segvar_run_stage(const segvar_config* cfg, const char* stage,
                                          const segvar_stage_options* options);

/* Binary masks (pixels 0 or 1, row-major) */
SEGVAR_API segvar_status segvar_mask_new(int width, int height, const uint8_t* pixels, segvar_mask** out);
SEGVAR_API segvar_status segvar_mask_load(const char* path, segvar_mask** out);
SEGVAR_API segvar_status segvar_mask_save(const segvar_mask* mask, const char* path);
SEGVAR_API int segvar_mask_width(const segvar_mask* mask);
SEGVAR_API int segvar_mask_height(const segvar_mask* mask);
SEGVAR_API const uint8_t* segvar_mask_pixels(const segvar_mask* mask);
SEGVAR_API void segvar_mask_free(segvar_mask* mask);

/* Metrics */
SEGVAR_API segvar_status segvar_confusion_counts(const segvar_mask* pred, const segvar_mask* truth,
                                                 segvar_confusion* out);
SEGVAR_API segvar_status segvar_dsc(const segvar_mask* pred, const segvar_mask* truth, double* out);
SEGVAR_API segvar_status segvar_sensitivity(const segvar_mask* pred, const segvar_mask* truth, double* out);
SEGVAR_API segvar_status segvar_specificity(const segvar_mask* pred, const segvar_mask* truth, double* out);

/* Bias-variance decomposition of an odd ensemble of n >= 3 predictions. */
SEGVAR_API segvar_status segvar_decompose(const segvar_mask* truth, const segvar_mask* const* predictions, size_t n,
                                          segvar_decomposition** out);
SEGVAR_API int segvar_decomposition_ensemble_size(const segvar_decomposition* d);
/* Returns SEGVAR_EMPTY_INPUT when the region has no pixels. */
SEGVAR_API segvar_status segvar_decomposition_expectations(const segvar_decomposition* d, segvar_region region,
                                                           segvar_expectations* out);
/* Per-pixel counts out of the ensemble size; arrays of width*height entries. */
SEGVAR_API const uint16_t* segvar_decomposition_variance_counts(const segvar_decomposition* d);
SEGVAR_API const uint16_t* segvar_decomposition_loss_counts(const segvar_decomposition* d);
SEGVAR_API const uint8_t* segvar_decomposition_main(const segvar_decomposition* d);
SEGVAR_API const uint8_t* segvar_decomposition_bias(const segvar_decomposition* d);
SEGVAR_API void segvar_decomposition_free(segvar_decomposition* d);

/* Statistics */
SEGVAR_API segvar_status segvar_paired_t_test(const double* a, const double* b, size_t n, segvar_ttest* out);

#ifdef __cplusplus
}
#endif

#endif /* SEGVAR_H */
