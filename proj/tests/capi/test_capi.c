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

/* Exercises the public C interface end to end. Built as C so the header is
 * checked for C compatibility; links only the shared library. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "crkd/crkd.h"

static int failures = 0;

#define EXPECT(cond)                                                    \
  do {                                                                  \
    if (!(cond)) {                                                      \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                       \
    }                                                                   \
  } while (0)

#define EXPECT_OK(call)                                                          \
  do {                                                                           \
    crkd_status s_ = (call);                                                     \
    if (s_ != CRKD_OK) {                                                         \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,        \
              crkd_status_name(s_), crkd_last_error());                          \
      ++failures;                                                                \
    }                                                                            \
  } while (0)

static void test_config(void) {
  crkd_config* cfg = NULL;
  EXPECT(crkd_config_from_preset("nope", &cfg) == CRKD_CONFIGURATION_ERROR);
  EXPECT(strlen(crkd_last_error()) > 0);
  EXPECT_OK(crkd_config_from_preset("rwth-like", &cfg));
  EXPECT(crkd_config_set(cfg, "resolution", "60") == CRKD_OK);
  EXPECT(crkd_config_validate(cfg) == CRKD_UNSUPPORTED_RESOLUTION);
  EXPECT_OK(crkd_config_set(cfg, "resolution", "72"));
  EXPECT(crkd_config_set(cfg, "no_such_key", "1") == CRKD_CONFIGURATION_ERROR);
  EXPECT(crkd_config_merge_json(cfg, "{broken") == CRKD_CONFIGURATION_ERROR);
  char* json = NULL;
  EXPECT_OK(crkd_config_to_json(cfg, &json));
  EXPECT(json && strstr(json, "\"alpha\"") != NULL);
  crkd_config* copy = NULL;
  EXPECT_OK(crkd_config_from_preset("toy", &copy));
  EXPECT_OK(crkd_config_merge_json(copy, json));
  char* again = NULL;
  EXPECT_OK(crkd_config_to_json(copy, &again));
  EXPECT(json && again && strcmp(json, again) == 0);
  crkd_string_free(json);
  crkd_string_free(again);
  crkd_config_free(copy);
  crkd_config_free(cfg);
  EXPECT(crkd_config_from_preset("toy", NULL) == CRKD_INVALID_ARGUMENT);
  EXPECT(strcmp(crkd_status_name(CRKD_FROZEN_PARAMETER), "frozen-parameter") == 0);
}

static void test_profile(void) {
  int k = 0;
  EXPECT_OK(crkd_resolution_kernel(104, 7, &k));
  EXPECT(k == 7);
  EXPECT(crkd_resolution_kernel(60, 7, &k) == CRKD_UNSUPPORTED_RESOLUTION);
  crkd_config* cfg = NULL;
  EXPECT_OK(crkd_config_from_preset("rwth-like", &cfg));
  crkd_profile_report r;
  EXPECT_OK(crkd_profile(cfg, 0, &r));
  EXPECT(fabs((double)r.parameters / 1e6 - 10.5) / 10.5 < 0.03);
  EXPECT(fabs((double)r.macs / 1e9 - 257.0) / 257.0 < 0.05);
  EXPECT(r.frame_feature_channels == 2048);
  EXPECT(r.frame_feature_side == 7);
  EXPECT(r.latency_mean_ms == 0.0);
  crkd_config_free(cfg);
}

static void test_numerics(void) {
  /* two frames, classes {blank, a}: p(a) = 1 - (1 - .6)(1 - .7) ... via paths
   * a-a, a-blank, blank-a */
  const double p[4] = {0.4, 0.6, 0.3, 0.7};
  double lp[4];
  for (int i = 0; i < 4; ++i) lp[i] = log(p[i]);
  const int label[1] = {1};
  double loss = 0.0;
  EXPECT_OK(crkd_ctc_loss(lp, 2, 2, label, 1, &loss));
  EXPECT(fabs(loss + log(0.6 * 0.7 + 0.6 * 0.3 + 0.4 * 0.7)) < 1e-12);
  const int twice[2] = {1, 1};
  EXPECT_OK(crkd_ctc_loss(lp, 2, 2, twice, 2, &loss));
  EXPECT(loss == 1e30);
  EXPECT(crkd_ctc_loss(lp, 2, 2, NULL, 1, &loss) == CRKD_INVALID_ARGUMENT);

  int out[4];
  int length = -1;
  EXPECT_OK(crkd_beam_decode(p, 2, 2, 10, out, 4, &length));
  EXPECT(length == 1 && out[0] == 1);
  EXPECT(crkd_beam_decode(p, 2, 2, 10, out, 0, &length) == CRKD_INVALID_ARGUMENT);

  const int ref[3] = {1, 2, 3}, hyp[3] = {1, 9, 3};
  crkd_wer_report w;
  EXPECT_OK(crkd_wer(ref, 3, hyp, 3, &w));
  EXPECT(w.substitutions == 1 && w.insertions == 0 && w.deletions == 0);
  EXPECT(fabs(w.wer - 100.0 / 3.0) < 1e-9);
  EXPECT(crkd_wer(ref, 0, hyp, 3, &w) == CRKD_INVALID_ARGUMENT);
}

static void test_pipeline(const char* root) {
  char data[512], tdir[512], sdir[512], cdir[512], path[1024];
  snprintf(data, sizeof data, "%s/data", root);
  snprintf(tdir, sizeof tdir, "%s/teacher", root);
  snprintf(sdir, sizeof sdir, "%s/student", root);
  snprintf(cdir, sizeof cdir, "%s/compare", root);

  crkd_config* cfg = NULL;
  EXPECT_OK(crkd_config_from_preset("toy", &cfg));
  EXPECT_OK(crkd_config_merge_json(
      cfg, "{\"num_train\": 4, \"num_val\": 2, \"epochs\": 1, \"lr_drops\": [], "
           "\"resolutions\": [24], \"seeds\": [1], \"beam_width\": 3}"));
  EXPECT_OK(crkd_generate_dataset(cfg, data));

  crkd_dataset* train = NULL;
  crkd_dataset* val = NULL;
  snprintf(path, sizeof path, "%s/train", data);
  EXPECT_OK(crkd_dataset_load(path, &train));
  snprintf(path, sizeof path, "%s/val", data);
  EXPECT_OK(crkd_dataset_load(path, &val));
  EXPECT(crkd_dataset_size(train) == 4);
  EXPECT(crkd_dataset_size(val) == 2);
  EXPECT(crkd_dataset_load("/nonexistent/crkd", &val) != CRKD_OK);

  crkd_model* teacher = NULL;
  EXPECT_OK(crkd_train_teacher(cfg, train, val, tdir, &teacher));
  uint32_t h0 = 0, h1 = 0;
  EXPECT_OK(crkd_model_hash(teacher, &h0));

  crkd_model* student = NULL;
  EXPECT_OK(crkd_distill(cfg, teacher, train, val, sdir, &student));
  EXPECT_OK(crkd_model_hash(teacher, &h1));
  EXPECT(h0 == h1);

  crkd_wer_report w;
  EXPECT_OK(crkd_evaluate(cfg, student, val, &w));
  EXPECT(w.ref_length > 0);
  EXPECT(w.wer >= 0.0);

  snprintf(path, sizeof path, "%s/teacher.crkw", tdir);
  crkd_model* loaded = NULL;
  EXPECT_OK(crkd_model_load(cfg, "teacher", path, &loaded));
  uint32_t h2 = 0;
  EXPECT_OK(crkd_model_hash(loaded, &h2));
  EXPECT(h2 == h0);
  EXPECT(crkd_model_load(cfg, "referee", path, &loaded) == CRKD_INVALID_ARGUMENT);
  snprintf(path, sizeof path, "%s/student.crkw", sdir);
  EXPECT(crkd_model_load(cfg, "teacher", path, &loaded) == CRKD_CONFIGURATION_ERROR);

  int written = -1;
  snprintf(path, sizeof path, "%s/epochs.tsv", tdir);
  EXPECT_OK(crkd_emit_curves(path, tdir, &written));
  EXPECT(written == 1);

  EXPECT_OK(crkd_compare_methods(cfg, teacher, train, val, cdir));
  snprintf(path, sizeof path, "%s/comparison.tsv", cdir);
  FILE* f = fopen(path, "r");
  EXPECT(f != NULL);
  if (f) {
    int lines = 0;
    for (int c; (c = fgetc(f)) != EOF;) lines += c == '\n';
    EXPECT(lines == 4);
    fclose(f);
  }

  crkd_model_free(loaded);
  crkd_model_free(student);
  crkd_model_free(teacher);
  crkd_dataset_free(train);
  crkd_dataset_free(val);
  crkd_config_free(cfg);
}

int main(int argc, char** argv) {
  const char* root = argc > 1 ? argv[1] : "crkd_capi_scratch";
  test_config();
  test_profile();
  test_numerics();
  test_pipeline(root);
  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
