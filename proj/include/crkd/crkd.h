// Copyright 2026 The crkd Authors
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

/* crkd: cross-resolution knowledge distillation toolkit, C interface.
 *
 * Every function returns a crkd_status. On failure the message of the most
 * recent error on the calling thread is available from crkd_last_error().
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function. Strings returned through char** are released with
 * crkd_string_free. */
#ifndef CRKD_CRKD_H_
#define CRKD_CRKD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(CRKD_BUILDING_LIBRARY)
#define CRKD_API __attribute__((visibility("default")))
#else
#define CRKD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum crkd_status {
  CRKD_OK = 0,
  CRKD_INVALID_ARGUMENT = 1,
  CRKD_UNSUPPORTED_RESOLUTION = 2,
  CRKD_PARSE_ERROR = 3,
  CRKD_TRUNCATED = 4,
  CRKD_CONFIGURATION_ERROR = 5,
  CRKD_IO_ERROR = 6,
  CRKD_RUNTIME_ERROR = 7,
  CRKD_FROZEN_PARAMETER = 8,
  CRKD_INTERNAL_ERROR = 99
} crkd_status;

typedef struct crkd_config crkd_config;
typedef struct crkd_dataset crkd_dataset;
typedef struct crkd_model crkd_model;

typedef struct crkd_wer_report {
  int insertions;
  int deletions;
  int substitutions;
  int ref_length;
  double wer; /* percent */
} crkd_wer_report;

typedef struct crkd_profile_report {
  uint64_t parameters;
  double parameter_memory_mb;
  uint64_t macs;
  int frame_feature_channels;
  int frame_feature_side;
  double latency_mean_ms; /* 0 when not measured */
  double latency_min_ms;
  double latency_max_ms;
} crkd_profile_report;

CRKD_API const char* crkd_last_error(void);
CRKD_API const char* crkd_status_name(crkd_status status);
CRKD_API void crkd_string_free(char* text);

/* Run configuration: a preset plus overrides, serialisable to flat JSON. */
CRKD_API crkd_status crkd_config_from_preset(const char* preset, crkd_config** out);
CRKD_API crkd_status crkd_config_merge_json(crkd_config* config, const char* json_text);
CRKD_API crkd_status crkd_config_load(const char* path, crkd_config** out);
/* Sets one key; value_json is the JSON encoding of the value ("72", "\"toy\""). */
CRKD_API crkd_status crkd_config_set(crkd_config* config, const char* key, const char* value_json);
CRKD_API crkd_status crkd_config_to_json(const crkd_config* config, char** out);
CRKD_API crkd_status crkd_config_validate(const crkd_config* config);
CRKD_API void crkd_config_free(crkd_config* config);

CRKD_API crkd_status crkd_resolution_kernel(int resolution, int feature_side, int* kernel);

/* Analytic profile of the student selected by the config (method 1 or 2) or
 * of the teacher when teacher != 0, for a clip of config "frames" frames. */
CRKD_API crkd_status crkd_profile(const crkd_config* config, int teacher,
                                  crkd_profile_report* out);
/* Writes profile.tsv and profile.json under out_dir, timing inference when
 * the config asks for latency repetitions. */
CRKD_API crkd_status crkd_profile_write(const crkd_config* config, int teacher,
                                        const char* out_dir, crkd_profile_report* out);

/* Synthetic data: writes out_dir/train and out_dir/val dataset directories. */
CRKD_API crkd_status crkd_generate_dataset(const crkd_config* config, const char* out_dir);
/* Loads a dataset directory (one holding manifest.tsv). */
CRKD_API crkd_status crkd_dataset_load(const char* dir, crkd_dataset** out);
CRKD_API size_t crkd_dataset_size(const crkd_dataset* dataset);
CRKD_API void crkd_dataset_free(crkd_dataset* dataset);

/* Trains and freezes the reference teacher. Writes teacher.crkw,
 * train_log.tsv, epochs.tsv and curves under out_dir. validation may be 0. */
CRKD_API crkd_status crkd_train_teacher(const crkd_config* config, const crkd_dataset* train,
                                        const crkd_dataset* validation, const char* out_dir,
                                        crkd_model** out);
/* Distils a student from a frozen teacher; writes student.crkw and logs. */
CRKD_API crkd_status crkd_distill(const crkd_config* config, const crkd_model* teacher,
                                  const crkd_dataset* train, const crkd_dataset* validation,
                                  const char* out_dir, crkd_model** out);
/* Rebuilds a model from the config and loads weights. role is "teacher" or
 * "student"; loaded teachers are frozen. */
CRKD_API crkd_status crkd_model_load(const crkd_config* config, const char* role,
                                     const char* weights_path, crkd_model** out);
CRKD_API crkd_status crkd_model_save(const crkd_model* model, const char* weights_path);
CRKD_API crkd_status crkd_model_hash(const crkd_model* model, uint32_t* hash);
CRKD_API void crkd_model_free(crkd_model* model);

/* Center-crop corpus WER with the config's beam width. */
CRKD_API crkd_status crkd_evaluate(const crkd_config* config, crkd_model* model,
                                   const crkd_dataset* dataset, crkd_wer_report* out);

/* Trains orig / method-1 / method-2 students for every configured resolution
 * and seed. With teacher == 0 one teacher is trained per seed. Writes
 * comparison.tsv and deltas.tsv under out_dir. */
CRKD_API crkd_status crkd_compare_methods(const crkd_config* config, const crkd_model* teacher,
                                          const crkd_dataset* train, const crkd_dataset* heldout,
                                          const char* out_dir);

/* Re-renders curves.csv / curves.svg from an epochs.tsv log. *written is 0
 * when the log holds no WER rows. */
CRKD_API crkd_status crkd_emit_curves(const char* epoch_log_path, const char* out_dir,
                                      int* written);

/* Stand-alone numerics. log_probs / probs are row-major T x V, column 0 the
 * blank. */
CRKD_API crkd_status crkd_ctc_loss(const double* log_probs, int frames, int classes,
                                   const int* label, int label_length, double* loss);
CRKD_API crkd_status crkd_wer(const int* reference, int reference_length, const int* hypothesis,
                              int hypothesis_length, crkd_wer_report* out);
/* Decodes into out (capacity entries); *length receives the decoded length. */
CRKD_API crkd_status crkd_beam_decode(const double* probs, int frames, int classes, int width,
                                      int* out, int capacity, int* length);

#ifdef __cplusplus
}
#endif

#endif /* CRKD_CRKD_H_ */
