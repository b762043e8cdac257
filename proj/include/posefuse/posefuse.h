/*
 * Copyright 2026 The posefuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef POSEFUSE_POSEFUSE_H
#define POSEFUSE_POSEFUSE_H

/*
 * C interface to the posefuse library: dataset conversion, synthetic data,
 * staged training, evaluation and figure export.
 *
 * Every fallible call returns a pf_status. On failure the message is available
 * from pf_last_error() on the same thread until the next call. Handles are
 * opaque and owned by the caller; strings returned through char** out
 * parameters are released with pf_string_free().
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PF_API __declspec(dllexport)
#else
#define PF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pf_status {
  PF_OK = 0,
  PF_ERR_INVALID_ARGUMENT = 1,
  PF_ERR_PARSE = 2,
  PF_ERR_PRECONDITION = 3,
  PF_ERR_DIVERGENCE = 4,
  PF_ERR_IO = 5,
  PF_ERR_INCOMPATIBLE = 6,
  PF_ERR_INTERNAL = 7
} pf_status;

typedef struct pf_config pf_config;
typedef struct pf_checkpoint pf_checkpoint;

PF_API const char* pf_version(void);

/* Message of the last failed call on this thread; "" when there is none. */
PF_API const char* pf_last_error(void);

PF_API const char* pf_status_name(pf_status status);

PF_API void pf_string_free(char* s);

/* ---- conversion ---------------------------------------------------------- */

typedef struct pf_convert_summary {
  size_t converted;
  size_t excluded;        /* degenerate depth scale */
  size_t nan_substituted; /* missing joints replaced by (0, 0) */
} pf_convert_summary;

/*
 * Harmonizes a RawRecord JSON-lines file into HarmonizedSample JSON lines.
 * `dataset` may be NULL; otherwise every record must carry that dataset name.
 */
PF_API pf_status pf_convert(
    const char* input_path,
    const char* dataset,
    const char* output_path,
    pf_convert_summary* summary);

/* ---- synthetic data ------------------------------------------------------ */

typedef struct pf_synth_options {
  uint64_t seed;
  int n_samples;
  int image_size;
  const char* dataset; /* mpii, lsp, flic, h36m, mpii3d or op */
  const char* split;   /* train or test */
  int harmonize;       /* nonzero also writes samples.jsonl */
} pf_synth_options;

/* Defaults: seed 0, 100 samples, 64 px, mpii, train, harmonize on. */
PF_API void pf_synth_options_init(pf_synth_options* options);

typedef struct pf_synth_summary {
  size_t records;
  size_t samples;
  size_t excluded;
} pf_synth_summary;

PF_API pf_status pf_synth(const pf_synth_options* options, const char* out_dir, pf_synth_summary* summary);

/* ---- training configuration --------------------------------------------- */

/* Stage defaults for `stage` (s1, s2, s3) and `mode` (fusion, 3d-only; NULL means fusion). */
PF_API pf_status pf_config_default(const char* stage, const char* mode, pf_config** out);

/*
 * Overlays a JSON config file. Training fields override the current values; an
 * optional "network" object sets the architecture used for a fresh network.
 */
PF_API pf_status pf_config_load(pf_config* config, const char* path);
PF_API pf_status pf_config_set_seed(pf_config* config, uint64_t seed);
PF_API pf_status pf_config_scale_epochs(pf_config* config, int factor);
PF_API pf_status pf_config_to_json(const pf_config* config, char** json);
PF_API void pf_config_free(pf_config* config);

/* ---- checkpoints --------------------------------------------------------- */

PF_API pf_status pf_checkpoint_load(const char* path, pf_checkpoint** out);
PF_API pf_status pf_checkpoint_save(const pf_checkpoint* checkpoint, const char* path);
/* Stage completed by the checkpoint: none, s1, s2 or s3. */
PF_API const char* pf_checkpoint_stage(const pf_checkpoint* checkpoint);
PF_API pf_status pf_checkpoint_metrics_json(const pf_checkpoint* checkpoint, char** json);
PF_API void pf_checkpoint_free(pf_checkpoint* checkpoint);

/* ---- training ------------------------------------------------------------ */

/* Receives each metric-log entry as one JSON object. */
typedef void (*pf_log_fn)(const char* json_line, void* user);

typedef struct pf_train_inputs {
  const char* const* data_paths; /* sample files or dataset directories */
  size_t n_data_paths;
  const char* val_path;          /* NULL holds out 10% of the training data */
  const pf_checkpoint* resume;   /* NULL starts a fresh network */
  const char* log_path;          /* NULL skips the JSON-lines log file */
  pf_log_fn log_fn;              /* may be NULL */
  void* log_user;
} pf_train_inputs;

PF_API pf_status pf_train_stage(const pf_config* config, const pf_train_inputs* inputs, pf_checkpoint** out);

/* ---- evaluation and figures ---------------------------------------------- */

/*
 * Evaluates a checkpoint on a dataset. `decode` is argmax or soft (NULL means
 * argmax). Either output may be NULL.
 */
PF_API pf_status pf_evaluate(
    const pf_checkpoint* checkpoint,
    const char* data_path,
    const char* decode,
    int per_joint,
    char** report_json,
    char** report_table);

/* Writes a PNG overlay of the 2D prediction and an SVG 3D wireframe. */
PF_API pf_status pf_render(
    const pf_checkpoint* checkpoint,
    const char* image_path,
    const char* overlay_png_path,
    const char* wireframe_svg_path);

#ifdef __cplusplus
}
#endif

#endif /* POSEFUSE_POSEFUSE_H */
