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

#include <fstream>
#include <sstream>

#include "crkd/common/error.hpp"
#include "crkd/train/train.hpp"
#include "json.hpp"

namespace crkd::train {

using nlohmann::json;

std::vector<std::string> preset_names() { return {"rwth-like", "csl-like", "toy"}; }

Preset preset(const std::string& name) {
  Preset p;
  p.name = name;
  if (name == "rwth-like") {
    p.schedule = TrainingSchedule::rwth_like();
    p.student_resolutions = {56, 72, 88, 104};
    return p;
  }
  if (name == "csl-like") {
    p.distill.ctc_levels = 2;
    p.distill.alpha = 280.0;
    p.distill.beta = 140.0;
    p.distill.vocab_size_with_blank = 179;
    p.schedule = TrainingSchedule::csl_like();
    p.augment.center_crop_only = true;
    p.augment.flip_probability = 0.0;
    p.augment.temporal_scale_bound = 0.0;
    p.student_resolutions = {56, 72, 88, 104};
    return p;
  }
  if (name == "toy") {
    arch::DistillConfig& d = p.distill;
    d.student_resolution = 24;
    d.teacher_resolution = 72;
    d.feature_side = 3;
    d.channels = 64;
    d.width = 4;
    d.teacher_width = 8;
    d.vocab_size_with_blank = 12;
    d.alpha = 10.0;
    d.beta = 1.0;
    d.ctc_levels = 4;
    p.schedule = TrainingSchedule::toy();
    p.augment.crop_source = 80;
    p.augment.crop_target = 72;
    p.num_train = 160;
    p.num_val = 40;
    p.frames_per_gloss = 6;
    p.student_resolutions = {24, 40, 56};
    return p;
  }
  fail(ErrorCode::kConfiguration, "unknown preset '" + name + "' (expected rwth-like, csl-like or toy)");
}

RunConfig RunConfig::from_preset(const std::string& name) {
  const Preset p = preset(name);
  RunConfig c;
  c.preset_name = name;
  c.distill = p.distill;
  c.schedule = p.schedule;
  c.augment = p.augment;
  c.num_train = p.num_train;
  c.num_val = p.num_val;
  c.frames_per_gloss = p.frames_per_gloss;
  c.resolutions = p.student_resolutions;
  return c;
}

namespace {

template <typename T>
T get(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kConfiguration, "config key '" + key + "' has the wrong type");
  }
}

}  // namespace

void RunConfig::merge_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfiguration, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::kConfiguration, "config must be a JSON object");
  if (j.contains("preset")) {
    const RunConfig base = from_preset(get<std::string>(j["preset"], "preset"));
    const std::string command_keep = command;
    *this = base;
    command = command_keep;
  }
  for (const auto& [key, v] : j.items()) {
    arch::DistillConfig& d = distill;
    if (key == "preset") continue;
    else if (key == "command") command = get<std::string>(v, key);
    else if (key == "data") data = get<std::string>(v, key);
    else if (key == "out") out = get<std::string>(v, key);
    else if (key == "teacher") teacher = get<std::string>(v, key);
    else if (key == "weights") weights = get<std::string>(v, key);
    else if (key == "model") model = get<std::string>(v, key);
    else if (key == "seed") seed = get<std::uint64_t>(v, key);
    else if (key == "seeds") seeds = get<std::vector<std::uint64_t>>(v, key);
    else if (key == "deterministic") deterministic = get<bool>(v, key);
    else if (key == "frames") frames = get<int>(v, key);
    else if (key == "latency_repetitions") latency_repetitions = get<int>(v, key);
    else if (key == "beam_width") beam_width = get<int>(v, key);
    else if (key == "eval_every") eval_every = get<int>(v, key);
    else if (key == "resolutions") resolutions = get<std::vector<int>>(v, key);
    else if (key == "resolution") d.student_resolution = get<int>(v, key);
    else if (key == "teacher_resolution") d.teacher_resolution = get<int>(v, key);
    else if (key == "feature_side") d.feature_side = get<int>(v, key);
    else if (key == "channels") d.channels = get<int>(v, key);
    else if (key == "width") d.width = get<int>(v, key);
    else if (key == "teacher_width") d.teacher_width = get<int>(v, key);
    else if (key == "vocab") d.vocab_size_with_blank = get<int>(v, key);
    else if (key == "alpha") d.alpha = get<double>(v, key);
    else if (key == "beta") d.beta = get<double>(v, key);
    else if (key == "levels") d.ctc_levels = get<int>(v, key);
    else if (key == "method") d.method = arch::parse_method(get<std::string>(v, key));
    else if (key == "gradient_stop") d.gradient_stop = get<bool>(v, key);
    else if (key == "gradient_stop_probability") d.gradient_stop_probability = get<double>(v, key);
    else if (key == "shift_forward") d.shift_forward = get<double>(v, key);
    else if (key == "shift_backward") d.shift_backward = get<double>(v, key);
    else if (key == "kl_reversed") d.kl_reversed = get<bool>(v, key);
    else if (key == "learning_rate") schedule.learning_rate = get<double>(v, key);
    else if (key == "weight_decay") schedule.weight_decay = get<double>(v, key);
    else if (key == "batch_size") schedule.batch_size = get<int>(v, key);
    else if (key == "epochs") schedule.epochs = get<int>(v, key);
    else if (key == "lr_drops") schedule.lr_drops = get<std::vector<std::pair<int, double>>>(v, key);
    else if (key == "crop_source") augment.crop_source = get<int>(v, key);
    else if (key == "crop_target") augment.crop_target = get<int>(v, key);
    else if (key == "flip_probability") augment.flip_probability = get<double>(v, key);
    else if (key == "temporal_scale_bound") augment.temporal_scale_bound = get<double>(v, key);
    else if (key == "center_crop_only") augment.center_crop_only = get<bool>(v, key);
    else if (key == "num_train") num_train = get<int>(v, key);
    else if (key == "num_val") num_val = get<int>(v, key);
    else if (key == "frames_per_gloss") frames_per_gloss = get<int>(v, key);
    else fail(ErrorCode::kConfiguration, "unknown config key '" + key + "'");
  }
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  const arch::DistillConfig& d = distill;
  j["command"] = command;
  j["preset"] = preset_name;
  j["data"] = data;
  j["out"] = out;
  j["teacher"] = teacher;
  j["weights"] = weights;
  j["model"] = model;
  j["seed"] = seed;
  j["seeds"] = seeds;
  j["deterministic"] = deterministic;
  j["frames"] = frames;
  j["latency_repetitions"] = latency_repetitions;
  j["beam_width"] = beam_width;
  j["eval_every"] = eval_every;
  j["resolutions"] = resolutions;
  j["resolution"] = d.student_resolution;
  j["teacher_resolution"] = d.teacher_resolution;
  j["feature_side"] = d.feature_side;
  j["channels"] = d.channels;
  j["width"] = d.width;
  j["teacher_width"] = d.teacher_width;
  j["vocab"] = d.vocab_size_with_blank;
  j["alpha"] = d.alpha;
  j["beta"] = d.beta;
  j["levels"] = d.ctc_levels;
  j["method"] = arch::method_name(d.method);
  j["gradient_stop"] = d.gradient_stop;
  j["gradient_stop_probability"] = d.gradient_stop_probability;
  j["shift_forward"] = d.shift_forward;
  j["shift_backward"] = d.shift_backward;
  j["kl_reversed"] = d.kl_reversed;
  j["learning_rate"] = schedule.learning_rate;
  j["weight_decay"] = schedule.weight_decay;
  j["batch_size"] = schedule.batch_size;
  j["epochs"] = schedule.epochs;
  j["lr_drops"] = schedule.lr_drops;
  j["crop_source"] = augment.crop_source;
  j["crop_target"] = augment.crop_target;
  j["flip_probability"] = augment.flip_probability;
  j["temporal_scale_bound"] = augment.temporal_scale_bound;
  j["center_crop_only"] = augment.center_crop_only;
  j["num_train"] = num_train;
  j["num_val"] = num_val;
  j["frames_per_gloss"] = frames_per_gloss;
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  distill.validate();
  schedule.validate();
  augment.validate();
  auto cfg = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorCode::kConfiguration, msg);
  };
  cfg(frames >= 4, "frames must be at least 4");
  cfg(beam_width >= 1, "beam_width must be at least 1");
  cfg(eval_every >= 0, "eval_every must be non-negative");
  cfg(latency_repetitions == 0 || latency_repetitions >= 3,
      "latency_repetitions must be 0 or at least 3");
  cfg(num_train >= 1 && num_val >= 0 && frames_per_gloss >= 1,
      "num_train, num_val and frames_per_gloss must be positive");
  cfg(!seeds.empty(), "seeds must not be empty");
  cfg(model == "student" || model == "teacher", "model must be 'student' or 'teacher'");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfiguration, "cannot read config file " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  RunConfig c;
  c.merge_json(text.str());
  return c;
}

}  // namespace crkd::train
