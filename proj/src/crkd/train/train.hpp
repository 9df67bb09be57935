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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crkd/arch/graph.hpp"
#include "crkd/arch/network.hpp"
#include "crkd/data/dataset.hpp"
#include "crkd/decode/decode.hpp"
#include "crkd/losses/losses.hpp"
#include "crkd/metrics/metrics.hpp"

namespace crkd::train {

// Adam with decoupled weight decay. Moments and updated parameters are kept
// float32-representable.
class AdamW {
 public:
  explicit AdamW(double weight_decay = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
                 double epsilon = 1e-8);

  // Applies one update to every learnable parameter of `network` using the
  // gradients currently stored on it.
  void step(arch::Network& network, double learning_rate);

  long steps() const { return steps_; }

  std::vector<arch::NamedArray> export_state() const;
  void import_state(const arch::Network& network, const std::vector<arch::NamedArray>& state);

 private:
  void ensure(const arch::Network& network);

  double weight_decay_, beta1_, beta2_, epsilon_;
  long steps_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainingSchedule {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  int batch_size = 2;
  int epochs = 85;
  // (epoch, multiplier): the multiplier applies from that 0-based epoch on.
  std::vector<std::pair<int, double>> lr_drops{{45, 0.2}, {65, 0.2}};

  void validate() const;
  double rate_at(int epoch) const;

  static TrainingSchedule rwth_like();
  static TrainingSchedule csl_like();
  static TrainingSchedule toy();
};

// Everything a preset pins: model, schedule, augmentation and the synthetic
// data geometry used by gen-data.
struct Preset {
  std::string name;
  arch::DistillConfig distill;
  TrainingSchedule schedule;
  data::AugmentPolicy augment;
  int num_train = 200;
  int num_val = 40;
  int frames_per_gloss = 8;
  std::vector<int> student_resolutions;
};

Preset preset(const std::string& name);
std::vector<std::string> preset_names();

struct RunConfig {
  std::string command;
  std::string data;
  std::string out = "out";
  std::string teacher;
  std::string weights;          // eval input
  std::string model = "student";  // eval / profile target: student or teacher
  std::string preset_name = "rwth-like";
  arch::DistillConfig distill;
  TrainingSchedule schedule;
  data::AugmentPolicy augment;
  int num_train = 200;
  int num_val = 40;
  int frames_per_gloss = 8;
  int frames = 200;  // clip length for profiling
  int latency_repetitions = 0;
  int beam_width = 10;
  int eval_every = 1;
  std::vector<int> resolutions;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::uint64_t seed = 1;
  bool deterministic = false;

  static RunConfig from_preset(const std::string& name);

  // Applies the keys of a flat JSON object; unknown keys are a configuration
  // error. A "preset" key is applied first so explicit keys override it.
  void merge_json(const std::string& json_text);
  std::string to_json() const;
  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

struct StepLog {
  int epoch = 0;
  int step = 0;
  std::string sample_id;
  loss::LossBreakdown breakdown;
  double learning_rate = 0.0;
  bool gate = false;
};

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  std::string split;  // split the WER was measured on; empty when skipped
  std::optional<double> wer;
};

struct TrainingLog {
  std::vector<StepLog> steps;
  std::vector<EpochLog> epochs;
};

std::string step_log_tsv(const TrainingLog& log);
std::string epoch_log_tsv(const TrainingLog& log);
TrainingLog parse_epoch_log_tsv(const std::string& text);

struct TrainOptions {
  TrainingSchedule schedule;
  data::AugmentPolicy augment;
  std::uint64_t seed = 1;
  int beam_width = 10;
  // Held-out split scored every `eval_every` epochs (and after the last one).
  const data::Dataset* validation = nullptr;
  int eval_every = 1;
  std::optional<std::filesystem::path> checkpoint_dir;
  bool resume = false;
  // Stops after this many epochs of the schedule (the rate trace still
  // follows the full schedule); used for resume tests and smoke runs.
  std::optional<int> stop_after_epochs;
  // Called after each step's backward pass and before the optimizer update,
  // with the clip the step consumed.
  std::function<void(const StepLog&, const data::VideoSample&, arch::Network&)> on_step;
};

struct WerEvaluation {
  metrics::WerReport corpus;
  std::vector<std::vector<int>> hypotheses;
};

// Center-crop evaluation: the crop is rescaled to the network input when the
// resolutions differ. Corpus WER is the ratio of summed counts.
WerEvaluation evaluate(arch::Network& network, const data::Dataset& dataset,
                       const data::AugmentPolicy& policy, const decode::BeamConfig& beam);

bool gradient_stop_gate(double probability, Rng& rng);

struct TeacherRun {
  arch::Network teacher;
  TrainingLog log;
};

// Trains the reference teacher on its own multi-level CTC loss and freezes it.
TeacherRun train_teacher(const data::Dataset& dataset, const arch::NetworkGraph& graph,
                         const TrainOptions& options);

struct StudentRun {
  arch::Network student;
  TrainingLog log;
};

StudentRun distill_student(const arch::Network& teacher, const data::Dataset& dataset,
                           const arch::DistillConfig& config, const TrainOptions& options);

// Student loss for one prepared clip; shared by the training loop and tests
// that re-evaluate logged steps.
loss::HybridResult student_step_loss(arch::Network& student, const arch::Network* teacher,
                                     const data::VideoSample& teacher_clip,
                                     const arch::DistillConfig& config, arch::Mode mode,
                                     arch::ForwardResult* forward_out = nullptr,
                                     bool with_grad = true);

struct ComparisonRow {
  arch::Method method = arch::Method::kMethod2;
  int resolution = 0;
  std::uint64_t seed = 0;
  double wer = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  std::optional<double> median(arch::Method method, int resolution) const;
  std::string tsv() const;
  // Per resolution: median WERs of each method and the method-2 deltas.
  std::string deltas_tsv() const;
};

// Teachers are indexed like `seeds`; each student at (method, resolution,
// seed) distils from teachers[i] and is scored on `heldout`.
ComparisonTable compare_methods(const std::vector<const arch::Network*>& teachers,
                                const data::Dataset& train, const data::Dataset& heldout,
                                const arch::DistillConfig& base,
                                const std::vector<int>& resolutions,
                                const std::vector<std::uint64_t>& seeds,
                                const TrainOptions& options);

// curves.csv (epoch, split, wer, lr) and curves.svg. Returns false and writes
// nothing when no epoch carries a WER.
bool emit_curves(const TrainingLog& log, const std::filesystem::path& dir);
std::string curves_csv(const TrainingLog& log);

}  // namespace crkd::train
