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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "crkd/common/error.hpp"
#include "crkd/train/train.hpp"
#include "json.hpp"

namespace crkd::train {
namespace {

using arch::Mode;
using arch::Network;
using data::VideoSample;

constexpr std::uint64_t kStudentSalt = 0x5157;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Rng epoch_rng(std::uint64_t seed, int epoch) { return Rng(seed).fork(static_cast<std::uint64_t>(epoch) + 1); }

void scale_grads(Network& net, double factor) {
  for (arch::Parameter* p : net.parameters())
    if (p->learnable)
      for (double& g : p->grad) g *= factor;
}

struct Checkpoint {
  int epoch = -1;
  std::string rng_state;
  double best_wer = std::numeric_limits<double>::infinity();
};

void save_checkpoint(const std::filesystem::path& dir, const Network& net, const AdamW& adam,
                     const Checkpoint& c) {
  std::filesystem::create_directories(dir);
  arch::save_weights(net, dir / "weights.crkw");
  arch::write_weights_file(dir / "optimizer.crkw", adam.export_state());
  nlohmann::ordered_json j;
  j["epoch"] = c.epoch;
  j["weights"] = "weights.crkw";
  j["optimizer"] = "optimizer.crkw";
  j["weights_hash"] = net.weights_hash();
  j["rng_state"] = c.rng_state;
  if (std::isfinite(c.best_wer)) j["best_wer"] = c.best_wer;
  else j["best_wer"] = nullptr;
  write_text(dir / "checkpoint.json", j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir, Network& net, AdamW& adam) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(dir / "checkpoint.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, "malformed checkpoint " + (dir / "checkpoint.json").string() + ": " + e.what());
  }
  Checkpoint c;
  c.epoch = j.at("epoch").get<int>();
  c.rng_state = j.at("rng_state").get<std::string>();
  if (!j.at("best_wer").is_null()) c.best_wer = j.at("best_wer").get<double>();
  arch::load_weights(net, dir / j.at("weights").get<std::string>());
  adam.import_state(net, arch::read_weights_file(dir / j.at("optimizer").get<std::string>()));
  return c;
}

using StepFn = std::function<loss::HybridResult(Network&, const VideoSample&, bool& gate, Rng&)>;

std::string resolved_split(const TrainOptions& o) { return o.validation ? "val" : ""; }

// Shared optimisation loop: per-epoch shuffled order, per-sequence
// augmentation, gradient accumulation over the batch, AdamW step.
TrainingLog run_loop(Network& net, const data::Dataset& dataset, const TrainOptions& opt,
                     const StepFn& step_fn) {
  opt.schedule.validate();
  opt.augment.validate();
  require(!dataset.samples.empty(), "training set is empty");
  require(opt.eval_every >= 0, "eval_every must be non-negative");
  const TrainingSchedule& sched = opt.schedule;
  AdamW adam(sched.weight_decay);
  TrainingLog log;
  Checkpoint ck;
  int start = 0;
  if (opt.resume) {
    require(opt.checkpoint_dir.has_value(), "resume requires a checkpoint directory");
    ck = load_checkpoint(*opt.checkpoint_dir, net, adam);
    if (ck.rng_state != epoch_rng(opt.seed, ck.epoch + 1).state()) {
      fail(ErrorCode::kConfiguration, "checkpoint in " + opt.checkpoint_dir->string() +
                                          " was written with a different seed");
    }
    start = ck.epoch + 1;
  }
  int end = sched.epochs;
  if (opt.stop_after_epochs) end = std::min(end, *opt.stop_after_epochs);

  const decode::BeamConfig beam{static_cast<std::size_t>(opt.beam_width), std::nullopt};
  for (int epoch = start; epoch < end; ++epoch) {
    const double lr = sched.rate_at(epoch);
    Rng rng = epoch_rng(opt.seed, epoch);
    std::vector<std::size_t> order(dataset.samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = rng.fork(0);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.uniform_int(0, static_cast<int>(i) - 1)]);
    Rng aug_rng = rng.fork(1);
    Rng gate_rng = rng.fork(2);

    const std::vector<arch::NamedArray> good = arch::export_weights(net);
    net.zero_grad();
    int in_batch = 0;
    double loss_sum = 0.0;
    int loss_count = 0;
    for (std::size_t s = 0; s < order.size(); ++s) {
      const VideoSample& sample = dataset.samples[order[s]];
      const VideoSample clip = data::augment_sequence(sample, opt.augment, aug_rng);
      bool gate = false;
      loss::HybridResult r = step_fn(net, clip, gate, gate_rng);
      StepLog sl{epoch, static_cast<int>(s), sample.id, r.breakdown, lr, gate};
      if (r.breakdown.feasible) {
        if (!std::isfinite(r.breakdown.total)) {
          arch::import_weights(net, good);
          fail(ErrorCode::kRuntime, "loss diverged at epoch " + std::to_string(epoch) + " step " +
                                        std::to_string(s) +
                                        "; weights restored to the last good checkpoint");
        }
        loss_sum += r.breakdown.total;
        ++loss_count;
        ++in_batch;
      }
      if (opt.on_step) opt.on_step(sl, clip, net);
      log.steps.push_back(std::move(sl));
      const bool last = s + 1 == order.size();
      if (in_batch > 0 && (in_batch == sched.batch_size || last)) {
        scale_grads(net, 1.0 / in_batch);
        adam.step(net, lr);
        net.zero_grad();
        in_batch = 0;
      }
    }

    EpochLog el;
    el.epoch = epoch;
    el.learning_rate = lr;
    el.mean_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
    const bool final_epoch = epoch + 1 == end;
    if (opt.validation && ((opt.eval_every > 0 && (epoch + 1) % opt.eval_every == 0) || final_epoch)) {
      el.split = resolved_split(opt);
      el.wer = evaluate(net, *opt.validation, opt.augment, beam).corpus.wer;
      ck.best_wer = std::min(ck.best_wer, *el.wer);
    }
    log.epochs.push_back(el);
    if (opt.checkpoint_dir) {
      ck.epoch = epoch;
      ck.rng_state = epoch_rng(opt.seed, epoch + 1).state();
      save_checkpoint(*opt.checkpoint_dir, net, adam, ck);
    }
  }
  return log;
}

void check_teacher_data(const data::Dataset& dataset, const data::AugmentPolicy& policy,
                        int input_resolution) {
  if (policy.crop_target != input_resolution) {
    fail(ErrorCode::kConfiguration,
         "augmentation crops to " + std::to_string(policy.crop_target) +
             " but the teacher expects " + std::to_string(input_resolution) + " pixels");
  }
  for (const auto& s : dataset.samples) {
    if (s.resolution() != policy.crop_source) {
      fail(ErrorCode::kConfiguration,
           "sample '" + s.id + "' is " + std::to_string(s.resolution()) +
               " pixels; the augmentation expects " + std::to_string(policy.crop_source));
    }
  }
}

}  // namespace

bool gradient_stop_gate(double probability, Rng& rng) {
  require(probability >= 0.0 && probability <= 1.0, "gate probability must lie in [0, 1]");
  if (probability == 0.0) return false;
  if (probability == 1.0) return true;
  return rng.bernoulli(probability);
}

WerEvaluation evaluate(Network& network, const data::Dataset& dataset,
                       const data::AugmentPolicy& policy, const decode::BeamConfig& beam) {
  const data::AugmentPolicy centered = policy.centered();
  const int res = network.graph().input.h;
  Rng unused(0);
  metrics::WerAccumulator acc;
  WerEvaluation out;
  for (const auto& sample : dataset.samples) {
    VideoSample clip = data::augment_sequence(sample, centered, unused);
    if (clip.resolution() != res) clip = data::rescale_resolution(clip, res);
    const arch::ForwardResult r = network.forward(clip.frames, Mode::kEval);
    const LogitsSequence probs = r.main_log_probs().array().exp().matrix();
    std::vector<int> hyp = decode::beam_search_decode(probs, beam);
    acc.add(metrics::wer(sample.glosses, hyp));
    out.hypotheses.push_back(std::move(hyp));
  }
  out.corpus = acc.total();
  return out;
}

TeacherRun train_teacher(const data::Dataset& dataset, const arch::NetworkGraph& graph,
                         const TrainOptions& options) {
  check_teacher_data(dataset, options.augment, graph.input.h);
  TeacherRun run{Network(graph, options.seed), {}};
  const StepFn step = [](Network& net, const VideoSample& clip, bool&, Rng&) {
    const arch::ForwardResult f = net.forward(clip.frames, Mode::kTrain);
    loss::HybridInputs in;
    in.level_log_probs = &f.level_log_probs;
    in.label = clip.glosses;
    loss::HybridResult r = loss::hybrid_loss(in, true);
    if (r.breakdown.feasible) net.backward({Tensor(), r.level_grads, false});
    return r;
  };
  run.log = run_loop(run.teacher, dataset, options, step);
  run.teacher.freeze();
  return run;
}

loss::HybridResult student_step_loss(Network& student, const Network* teacher,
                                     const VideoSample& teacher_clip,
                                     const arch::DistillConfig& config, Mode mode,
                                     arch::ForwardResult* forward_out, bool with_grad) {
  const bool plain = config.method == arch::Method::kOriginal;
  const double alpha = plain ? 0.0 : config.alpha;
  const double beta = plain ? 0.0 : config.beta;
  arch::TeacherOutputs t;
  if (alpha > 0.0 || beta > 0.0) {
    require(teacher != nullptr, "distillation with alpha or beta > 0 needs a teacher");
    t = arch::forward_teacher(*teacher, teacher_clip.frames);
  }
  const int res = student.graph().input.h;
  const VideoSample clip =
      teacher_clip.resolution() == res ? teacher_clip : data::rescale_resolution(teacher_clip, res);
  arch::ForwardResult local;
  arch::ForwardResult& f = forward_out ? *forward_out : local;
  f = student.forward(clip.frames, mode);
  loss::HybridInputs in;
  in.level_log_probs = &f.level_log_probs;
  in.label = clip.glosses;
  in.student_features = &f.frame_features;
  in.teacher_features = alpha > 0.0 ? &t.frame_features : nullptr;
  in.teacher_probs = beta > 0.0 ? &t.logits : nullptr;
  in.alpha = alpha;
  in.beta = beta;
  in.direction = config.kl_reversed ? loss::KlDirection::kTeacherFirst
                                    : loss::KlDirection::kStudentFirst;
  return loss::hybrid_loss(in, with_grad);
}

StudentRun distill_student(const Network& teacher, const data::Dataset& dataset,
                           const arch::DistillConfig& config, const TrainOptions& options) {
  config.validate();
  const arch::NetworkGraph graph = arch::build_for_method(config);
  const bool plain = config.method == arch::Method::kOriginal;
  const bool uses_teacher = !plain && (config.alpha > 0.0 || config.beta > 0.0);
  if (uses_teacher) {
    if (!teacher.frozen())
      fail(ErrorCode::kConfiguration, "teacher must be frozen before distillation");
    check_teacher_data(dataset, options.augment, teacher.graph().input.h);
    const arch::NetworkGraph tg = teacher.graph().with_frames(48);
    const arch::NetworkGraph sg = graph.with_frames(48);
    const Shape tf = tg.frame_feature_shape();
    const Shape sf = sg.frame_feature_shape();
    if (config.alpha > 0.0 && (tf.c != sf.c || tf.h != sf.h || tf.w != sf.w)) {
      fail(ErrorCode::kConfiguration, "teacher frame features " + tf.str() +
                                          " do not match student frame features " + sf.str());
    }
    if (config.beta > 0.0 && (tg.classes != sg.classes || tg.output_shape().t != sg.output_shape().t)) {
      fail(ErrorCode::kConfiguration, "teacher logits " + tg.output_shape().str() +
                                          " do not match student logits " + sg.output_shape().str());
    }
  } else {
    options.augment.validate();
  }

  const std::uint32_t teacher_hash = teacher.weights_hash();
  StudentRun run{Network(graph, Rng(options.seed).fork(kStudentSalt).next_u64()), {}};
  const Network* tptr = uses_teacher ? &teacher : nullptr;
  const StepFn step = [&](Network& net, const VideoSample& clip, bool& gate, Rng& gate_rng) {
    arch::ForwardResult f;
    loss::HybridResult r = student_step_loss(net, tptr, clip, config, Mode::kTrain, &f, true);
    gate = config.gradient_stop && gradient_stop_gate(config.gradient_stop_probability, gate_rng);
    if (r.breakdown.feasible) net.backward({r.feature_grad, r.level_grads, gate});
    return r;
  };
  run.log = run_loop(run.student, dataset, options, step);
  if (teacher.weights_hash() != teacher_hash)
    fail(ErrorCode::kRuntime, "teacher weights changed during distillation");
  return run;
}

std::optional<double> ComparisonTable::median(arch::Method method, int resolution) const {
  std::vector<double> w;
  for (const auto& r : rows)
    if (r.method == method && r.resolution == resolution) w.push_back(r.wer);
  if (w.empty()) return std::nullopt;
  std::sort(w.begin(), w.end());
  const std::size_t n = w.size();
  return n % 2 ? w[n / 2] : 0.5 * (w[n / 2 - 1] + w[n / 2]);
}

std::string ComparisonTable::tsv() const {
  std::ostringstream out;
  out << "method\tresolution\tseed\twer\n";
  for (const auto& r : rows)
    out << arch::method_name(r.method) << '\t' << r.resolution << '\t' << r.seed << '\t' << r.wer
        << '\n';
  return out.str();
}

std::string ComparisonTable::deltas_tsv() const {
  std::vector<int> resolutions;
  for (const auto& r : rows)
    if (std::find(resolutions.begin(), resolutions.end(), r.resolution) == resolutions.end())
      resolutions.push_back(r.resolution);
  std::ostringstream out;
  out << "resolution\tmedian_orig\tmedian_method1\tmedian_method2\tdelta_2_vs_orig\tdelta_2_vs_1\n";
  auto cell = [](std::optional<double> v) { return v ? std::to_string(*v) : std::string("na"); };
  for (int res : resolutions) {
    const auto o = median(arch::Method::kOriginal, res);
    const auto m1 = median(arch::Method::kMethod1, res);
    const auto m2 = median(arch::Method::kMethod2, res);
    out << res << '\t' << cell(o) << '\t' << cell(m1) << '\t' << cell(m2) << '\t'
        << cell(m2 && o ? std::optional<double>(*m2 - *o) : std::nullopt) << '\t'
        << cell(m2 && m1 ? std::optional<double>(*m2 - *m1) : std::nullopt) << '\n';
  }
  return out.str();
}

ComparisonTable compare_methods(const std::vector<const Network*>& teachers,
                                const data::Dataset& train, const data::Dataset& heldout,
                                const arch::DistillConfig& base,
                                const std::vector<int>& resolutions,
                                const std::vector<std::uint64_t>& seeds,
                                const TrainOptions& options) {
  require(teachers.size() == seeds.size(), "compare_methods needs one teacher per seed");
  require(!resolutions.empty(), "compare_methods needs at least one resolution");
  for (int r : resolutions) arch::resolution_kernel(r, base.feature_side);
  ComparisonTable table;
  const decode::BeamConfig beam{static_cast<std::size_t>(options.beam_width), std::nullopt};
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    require(teachers[i] != nullptr, "compare_methods got a null teacher");
    for (int res : resolutions) {
      for (arch::Method m : {arch::Method::kOriginal, arch::Method::kMethod1, arch::Method::kMethod2}) {
        arch::DistillConfig cfg = base;
        cfg.student_resolution = res;
        cfg.method = m;
        TrainOptions o = options;
        o.seed = seeds[i];
        o.validation = nullptr;
        o.checkpoint_dir.reset();
        o.resume = false;
        StudentRun run = distill_student(*teachers[i], train, cfg, o);
        const double w = evaluate(run.student, heldout, options.augment, beam).corpus.wer;
        table.rows.push_back({m, res, seeds[i], w});
      }
    }
  }
  return table;
}

std::string step_log_tsv(const TrainingLog& log) {
  std::ostringstream out;
  out.precision(17);
  std::size_t levels = 0;
  for (const auto& s : log.steps) levels = std::max(levels, s.breakdown.ctc_per_level.size());
  out << "epoch\tstep";
  for (std::size_t l = 0; l < levels; ++l) out << "\tctc" << l + 1;
  out << "\tmse\tkldiv\ttotal\tlr\tgate\tsample\tfeasible\n";
  for (const auto& s : log.steps) {
    out << s.epoch << '\t' << s.step;
    for (std::size_t l = 0; l < levels; ++l)
      out << '\t' << (l < s.breakdown.ctc_per_level.size() ? s.breakdown.ctc_per_level[l] : 0.0);
    out << '\t' << s.breakdown.mse << '\t' << s.breakdown.kldiv << '\t' << s.breakdown.total
        << '\t' << s.learning_rate << '\t' << (s.gate ? 1 : 0) << '\t' << s.sample_id << '\t'
        << (s.breakdown.feasible ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string epoch_log_tsv(const TrainingLog& log) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch\tlr\tmean_loss\tsplit\twer\n";
  for (const auto& e : log.epochs) {
    out << e.epoch << '\t' << e.learning_rate << '\t' << e.mean_loss << '\t'
        << (e.split.empty() ? "-" : e.split) << '\t';
    if (e.wer) out << *e.wer;
    else out << "-";
    out << '\n';
  }
  return out.str();
}

TrainingLog parse_epoch_log_tsv(const std::string& text) {
  TrainingLog log;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("epoch\tlr", 0) != 0)
    fail(ErrorCode::kParse, "epoch log lacks its header row");
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream fields(line);
    EpochLog e;
    std::string split, wer;
    if (!(fields >> e.epoch >> e.learning_rate >> e.mean_loss >> split >> wer))
      fail(ErrorCode::kParse, "epoch log row " + std::to_string(row) + " is malformed");
    if (split != "-") e.split = split;
    if (wer != "-") e.wer = std::stod(wer);
    log.epochs.push_back(e);
  }
  return log;
}

}  // namespace crkd::train
