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

#include "crkd/crkd.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "crkd/arch/network.hpp"
#include "crkd/common/error.hpp"
#include "crkd/data/dataset.hpp"
#include "crkd/decode/decode.hpp"
#include "crkd/losses/losses.hpp"
#include "crkd/metrics/metrics.hpp"
#include "crkd/train/train.hpp"

struct crkd_config {
  crkd::train::RunConfig run;
};

struct crkd_dataset {
  crkd::data::Dataset data;
};

struct crkd_model {
  std::unique_ptr<crkd::arch::Network> network;
  bool teacher = false;
};

namespace {

using namespace crkd;

thread_local std::string last_error;

crkd_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return CRKD_INVALID_ARGUMENT;
    case ErrorCode::kUnsupportedResolution: return CRKD_UNSUPPORTED_RESOLUTION;
    case ErrorCode::kParse: return CRKD_PARSE_ERROR;
    case ErrorCode::kTruncated: return CRKD_TRUNCATED;
    case ErrorCode::kConfiguration: return CRKD_CONFIGURATION_ERROR;
    case ErrorCode::kIo: return CRKD_IO_ERROR;
    case ErrorCode::kRuntime: return CRKD_RUNTIME_ERROR;
    case ErrorCode::kFrozenParameter: return CRKD_FROZEN_PARAMETER;
  }
  return CRKD_INTERNAL_ERROR;
}

template <typename F>
crkd_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return CRKD_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CRKD_RUNTIME_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CRKD_INTERNAL_ERROR;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

train::TrainOptions options_from(const train::RunConfig& c, const data::Dataset* validation) {
  train::TrainOptions o;
  o.schedule = c.schedule;
  o.augment = c.augment;
  o.seed = c.seed;
  o.beam_width = c.beam_width;
  o.validation = validation;
  o.eval_every = c.eval_every;
  return o;
}

void write_logs(const train::TrainingLog& log, const std::filesystem::path& dir) {
  write_text(dir / "train_log.tsv", train::step_log_tsv(log));
  write_text(dir / "epochs.tsv", train::epoch_log_tsv(log));
  train::emit_curves(log, dir);
}

void fill(crkd_wer_report* out, const metrics::WerReport& r) {
  out->insertions = r.insertions;
  out->deletions = r.deletions;
  out->substitutions = r.substitutions;
  out->ref_length = r.ref_length;
  out->wer = r.wer;
}

arch::NetworkGraph graph_for(const train::RunConfig& c, bool teacher) {
  return teacher ? arch::build_teacher(c.distill, c.frames) : arch::build_for_method(c.distill, c.frames);
}

metrics::ProfileReport run_profile(const crkd_config* config, int teacher) {
  need(config, "config");
  const arch::NetworkGraph g = graph_for(config->run, teacher != 0);
  metrics::ProfileReport r = metrics::profile(g, g.input);
  if (config->run.latency_repetitions > 0) {
    arch::Network net(g, config->run.seed);
    Tensor input(g.input, 0.5);
    r.latency = metrics::time_inference(net, input, config->run.latency_repetitions);
  }
  return r;
}

void fill(crkd_profile_report* out, const metrics::ProfileReport& r) {
  if (!out) return;
  out->parameters = r.parameters;
  out->parameter_memory_mb = r.parameter_memory_mb;
  out->macs = r.macs;
  out->frame_feature_channels = r.frame_features.c;
  out->frame_feature_side = r.frame_features.h;
  out->latency_mean_ms = r.latency ? r.latency->mean_ms : 0.0;
  out->latency_min_ms = r.latency ? r.latency->min_ms : 0.0;
  out->latency_max_ms = r.latency ? r.latency->max_ms : 0.0;
}

}  // namespace

extern "C" {

const char* crkd_last_error(void) { return last_error.c_str(); }

const char* crkd_status_name(crkd_status status) {
  switch (status) {
    case CRKD_OK: return "ok";
    case CRKD_INVALID_ARGUMENT: return "invalid-argument";
    case CRKD_UNSUPPORTED_RESOLUTION: return "unsupported-resolution";
    case CRKD_PARSE_ERROR: return "parse-error";
    case CRKD_TRUNCATED: return "truncated";
    case CRKD_CONFIGURATION_ERROR: return "configuration-error";
    case CRKD_IO_ERROR: return "io-error";
    case CRKD_RUNTIME_ERROR: return "runtime-error";
    case CRKD_FROZEN_PARAMETER: return "frozen-parameter";
    case CRKD_INTERNAL_ERROR: return "internal-error";
  }
  return "unknown";
}

void crkd_string_free(char* text) { std::free(text); }

crkd_status crkd_config_from_preset(const char* preset, crkd_config** out) {
  return guarded([&] {
    need(preset, "preset");
    need(out, "out");
    auto c = std::make_unique<crkd_config>();
    c->run = train::RunConfig::from_preset(preset);
    *out = c.release();
  });
}

crkd_status crkd_config_merge_json(crkd_config* config, const char* json_text) {
  return guarded([&] {
    need(config, "config");
    need(json_text, "json_text");
    config->run.merge_json(json_text);
  });
}

crkd_status crkd_config_load(const char* path, crkd_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto c = std::make_unique<crkd_config>();
    c->run = train::load_run_config(path);
    *out = c.release();
  });
}

crkd_status crkd_config_set(crkd_config* config, const char* key, const char* value_json) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value_json, "value_json");
    std::string quoted;
    for (const char* p = key; *p; ++p) {
      if (*p == '"' || *p == '\\') quoted += '\\';
      quoted += *p;
    }
    config->run.merge_json("{\"" + quoted + "\": " + value_json + "}");
  });
}

crkd_status crkd_config_to_json(const crkd_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = dup_string(config->run.to_json());
  });
}

crkd_status crkd_config_validate(const crkd_config* config) {
  return guarded([&] {
    need(config, "config");
    config->run.validate();
  });
}

void crkd_config_free(crkd_config* config) { delete config; }

crkd_status crkd_resolution_kernel(int resolution, int feature_side, int* kernel) {
  return guarded([&] {
    need(kernel, "kernel");
    *kernel = arch::resolution_kernel(resolution, feature_side);
  });
}

crkd_status crkd_profile(const crkd_config* config, int teacher, crkd_profile_report* out) {
  return guarded([&] {
    need(out, "out");
    need(config, "config");
    const arch::NetworkGraph g = graph_for(config->run, teacher != 0);
    fill(out, metrics::profile(g, g.input));
  });
}

crkd_status crkd_profile_write(const crkd_config* config, int teacher, const char* out_dir,
                               crkd_profile_report* out) {
  return guarded([&] {
    need(out_dir, "out_dir");
    const metrics::ProfileReport r = run_profile(config, teacher);
    metrics::write_profile(r, out_dir);
    fill(out, r);
  });
}

crkd_status crkd_generate_dataset(const crkd_config* config, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    const train::RunConfig& c = config->run;
    const std::filesystem::path dir(out_dir);
    const int res = c.augment.crop_source;
    data::save_dataset(data::generate_synthetic_dataset(c.distill.vocab_size_with_blank, c.num_train,
                                                        c.frames_per_gloss, res, c.seed),
                       dir / "train");
    if (c.num_val > 0) {
      data::save_dataset(data::generate_synthetic_dataset(c.distill.vocab_size_with_blank, c.num_val,
                                                          c.frames_per_gloss, res,
                                                          c.seed + data::kValidationSeedOffset),
                         dir / "val");
    }
  });
}

crkd_status crkd_dataset_load(const char* dir, crkd_dataset** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    auto d = std::make_unique<crkd_dataset>();
    d->data = data::load_dataset(dir);
    *out = d.release();
  });
}

size_t crkd_dataset_size(const crkd_dataset* dataset) {
  return dataset ? dataset->data.samples.size() : 0;
}

void crkd_dataset_free(crkd_dataset* dataset) { delete dataset; }

crkd_status crkd_train_teacher(const crkd_config* config, const crkd_dataset* train,
                               const crkd_dataset* validation, const char* out_dir,
                               crkd_model** out) {
  return guarded([&] {
    need(config, "config");
    need(train, "train");
    need(out_dir, "out_dir");
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    train::TrainOptions o = options_from(config->run, validation ? &validation->data : nullptr);
    o.checkpoint_dir = dir / "checkpoint";
    train::TeacherRun run =
        train::train_teacher(train->data, arch::build_teacher(config->run.distill), o);
    arch::save_weights(run.teacher, dir / "teacher.crkw");
    write_logs(run.log, dir);
    if (out) {
      auto m = std::make_unique<crkd_model>();
      m->network = std::make_unique<arch::Network>(std::move(run.teacher));
      m->teacher = true;
      *out = m.release();
    }
  });
}

crkd_status crkd_distill(const crkd_config* config, const crkd_model* teacher,
                         const crkd_dataset* train, const crkd_dataset* validation,
                         const char* out_dir, crkd_model** out) {
  return guarded([&] {
    need(config, "config");
    need(teacher, "teacher");
    need(train, "train");
    need(out_dir, "out_dir");
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    train::TrainOptions o = options_from(config->run, validation ? &validation->data : nullptr);
    o.checkpoint_dir = dir / "checkpoint";
    train::StudentRun run =
        train::distill_student(*teacher->network, train->data, config->run.distill, o);
    arch::save_weights(run.student, dir / "student.crkw");
    write_logs(run.log, dir);
    if (out) {
      auto m = std::make_unique<crkd_model>();
      m->network = std::make_unique<arch::Network>(std::move(run.student));
      *out = m.release();
    }
  });
}

crkd_status crkd_model_load(const crkd_config* config, const char* role, const char* weights_path,
                            crkd_model** out) {
  return guarded([&] {
    need(config, "config");
    need(role, "role");
    need(weights_path, "weights_path");
    need(out, "out");
    const std::string r(role);
    if (r != "teacher" && r != "student")
      fail(ErrorCode::kInvalidArgument, "role must be 'teacher' or 'student', got '" + r + "'");
    auto m = std::make_unique<crkd_model>();
    m->teacher = r == "teacher";
    m->network = std::make_unique<arch::Network>(graph_for(config->run, m->teacher), config->run.seed);
    arch::load_weights(*m->network, weights_path);
    if (m->teacher) m->network->freeze();
    *out = m.release();
  });
}

crkd_status crkd_model_save(const crkd_model* model, const char* weights_path) {
  return guarded([&] {
    need(model, "model");
    need(weights_path, "weights_path");
    arch::save_weights(*model->network, weights_path);
  });
}

crkd_status crkd_model_hash(const crkd_model* model, uint32_t* hash) {
  return guarded([&] {
    need(model, "model");
    need(hash, "hash");
    *hash = model->network->weights_hash();
  });
}

void crkd_model_free(crkd_model* model) { delete model; }

crkd_status crkd_evaluate(const crkd_config* config, crkd_model* model,
                          const crkd_dataset* dataset, crkd_wer_report* out) {
  return guarded([&] {
    need(config, "config");
    need(model, "model");
    need(dataset, "dataset");
    need(out, "out");
    const decode::BeamConfig beam{static_cast<std::size_t>(config->run.beam_width), std::nullopt};
    fill(out, train::evaluate(*model->network, dataset->data, config->run.augment, beam).corpus);
  });
}

crkd_status crkd_compare_methods(const crkd_config* config, const crkd_model* teacher,
                                 const crkd_dataset* train, const crkd_dataset* heldout,
                                 const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(train, "train");
    need(heldout, "heldout");
    need(out_dir, "out_dir");
    const train::RunConfig& c = config->run;
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    std::vector<int> resolutions = c.resolutions;
    if (resolutions.empty()) resolutions = {c.distill.student_resolution};
    train::TrainOptions o = options_from(c, nullptr);
    o.eval_every = 0;

    std::vector<arch::Network> owned;
    owned.reserve(c.seeds.size());
    std::vector<const arch::Network*> teachers;
    std::ostringstream teacher_rows;
    teacher_rows << "seed\theldout_wer\n";
    const decode::BeamConfig beam{static_cast<std::size_t>(c.beam_width), std::nullopt};
    for (std::uint64_t seed : c.seeds) {
      if (teacher) {
        teachers.push_back(teacher->network.get());
        continue;
      }
      train::TrainOptions to = o;
      to.seed = seed;
      train::TeacherRun run = train::train_teacher(train->data, arch::build_teacher(c.distill), to);
      const double w = train::evaluate(run.teacher, heldout->data, c.augment, beam).corpus.wer;
      teacher_rows << seed << '\t' << w << '\n';
      arch::save_weights(run.teacher, dir / ("teacher_seed" + std::to_string(seed) + ".crkw"));
      owned.push_back(std::move(run.teacher));
      teachers.push_back(&owned.back());
    }
    if (!teacher) write_text(dir / "teachers.tsv", teacher_rows.str());
    const train::ComparisonTable table = train::compare_methods(
        teachers, train->data, heldout->data, c.distill, resolutions, c.seeds, o);
    write_text(dir / "comparison.tsv", table.tsv());
    write_text(dir / "deltas.tsv", table.deltas_tsv());
  });
}

crkd_status crkd_emit_curves(const char* epoch_log_path, const char* out_dir, int* written) {
  return guarded([&] {
    need(epoch_log_path, "epoch_log_path");
    need(out_dir, "out_dir");
    std::ifstream in(epoch_log_path);
    if (!in) fail(ErrorCode::kIo, std::string("cannot read ") + epoch_log_path);
    std::stringstream text;
    text << in.rdbuf();
    const bool ok = train::emit_curves(train::parse_epoch_log_tsv(text.str()), out_dir);
    if (written) *written = ok ? 1 : 0;
  });
}

crkd_status crkd_ctc_loss(const double* log_probs, int frames, int classes, const int* label,
                          int label_length, double* loss) {
  return guarded([&] {
    need(log_probs, "log_probs");
    need(loss, "loss");
    require(frames >= 1 && classes >= 2 && label_length >= 0, "bad CTC dimensions");
    require(label_length == 0 || label != nullptr, "label must not be null");
    const LogitsSequence lp = Eigen::Map<const LogitsSequence>(log_probs, frames, classes);
    *loss = loss::ctc_loss(lp, std::span<const int>(label, label_length), false).loss;
  });
}

crkd_status crkd_wer(const int* reference, int reference_length, const int* hypothesis,
                     int hypothesis_length, crkd_wer_report* out) {
  return guarded([&] {
    need(out, "out");
    require(reference_length >= 0 && hypothesis_length >= 0, "negative sequence length");
    require(reference_length == 0 || reference, "reference must not be null");
    require(hypothesis_length == 0 || hypothesis, "hypothesis must not be null");
    fill(out, metrics::wer(std::span<const int>(reference, reference_length),
                           std::span<const int>(hypothesis, hypothesis_length)));
  });
}

crkd_status crkd_beam_decode(const double* probs, int frames, int classes, int width, int* out,
                             int capacity, int* length) {
  return guarded([&] {
    need(probs, "probs");
    need(length, "length");
    require(frames >= 1 && classes >= 2 && width >= 1, "bad decode dimensions");
    const LogitsSequence p = Eigen::Map<const LogitsSequence>(probs, frames, classes);
    const std::vector<int> seq =
        decode::beam_search_decode(p, {static_cast<std::size_t>(width), std::nullopt});
    *length = static_cast<int>(seq.size());
    if (static_cast<int>(seq.size()) > capacity || (!seq.empty() && out == nullptr))
      fail(ErrorCode::kInvalidArgument, "output buffer too small for the decoded sequence");
    std::copy(seq.begin(), seq.end(), out);
  });
}

}  // extern "C"
