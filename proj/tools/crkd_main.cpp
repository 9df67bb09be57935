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

// crkd command-line driver. Talks to the library exclusively through the C
// interface in crkd/crkd.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crkd/crkd.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(crkd_status s) {
  switch (s) {
    case CRKD_OK: return kExitOk;
    case CRKD_CONFIGURATION_ERROR:
    case CRKD_UNSUPPORTED_RESOLUTION: return kExitConfig;
    default: return kExitRuntime;
  }
}

void check(crkd_status s, const std::string& what) {
  if (s != CRKD_OK)
    throw Failure{exit_code_for(s), what + ": " + crkd_status_name(s) + ": " + crkd_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<crkd_config, crkd_config_free>;
using Dataset = Handle<crkd_dataset, crkd_dataset_free>;
using Model = Handle<crkd_model, crkd_model_free>;

// Flag values collected by CLI11; only flags the user actually passed are
// forwarded as config overrides.
struct Flags {
  std::string config_file;
  std::string preset;
  std::map<std::string, std::string> overrides;  // key -> JSON text
};

void add_common(CLI::App* sub, Flags& f) {
  auto str = [&](const char* flag, const char* key, const char* help) {
    sub->add_option_function<std::string>(
        flag, [&f, key](const std::string& v) { f.overrides[key] = nlohmann::json(v).dump(); }, help);
  };
  auto num = [&](const char* flag, const char* key, const char* help) {
    sub->add_option_function<double>(
        flag, [&f, key](double v) { f.overrides[key] = nlohmann::json(v).dump(); }, help);
  };
  auto integer = [&](const char* flag, const char* key, const char* help) {
    sub->add_option_function<long long>(
        flag, [&f, key](long long v) { f.overrides[key] = nlohmann::json(v).dump(); }, help);
  };
  auto ints = [&](const char* flag, const char* key, const char* help) {
    sub->add_option_function<std::vector<long long>>(
        flag, [&f, key](const std::vector<long long>& v) { f.overrides[key] = nlohmann::json(v).dump(); },
        help)->delimiter(',');
  };
  auto flag = [&](const char* name, const char* key, const char* help) {
    sub->add_flag_function(
        name, [&f, key](std::int64_t) { f.overrides[key] = "true"; }, help);
  };

  sub->add_option("--config", f.config_file, "JSON run config (e.g. a frozen config.json)");
  sub->add_option("--preset", f.preset, "rwth-like, csl-like or toy")
      ->check(CLI::IsMember({"rwth-like", "csl-like", "toy"}));
  str("--out", "out", "output directory");
  str("--data", "data", "dataset directory (or a gen-data output holding train/ and val/)");
  str("--teacher", "teacher", "frozen teacher weights file");
  integer("--seed", "seed", "random seed");
  flag("--deterministic", "deterministic", "fixed-order single-threaded execution");
  integer("--resolution", "resolution", "student input resolution");
  integer("--teacher-resolution", "teacher_resolution", "teacher input resolution");
  integer("--feature-side", "feature_side", "frame-feature spatial side");
  integer("--channels", "channels", "frame-level feature channels N");
  integer("--width", "width", "student stem width");
  integer("--teacher-width", "teacher_width", "reference teacher width");
  integer("--vocab", "vocab", "vocabulary size including the blank");
  num("--alpha", "alpha", "feature-distillation weight");
  num("--beta", "beta", "logit-distillation weight");
  integer("--levels", "levels", "number of CTC levels (1-4)");
  sub->add_option_function<std::string>(
         "--method", [&f](const std::string& v) { f.overrides["method"] = nlohmann::json(v).dump(); },
         "student construction: 1, 2 or orig")
      ->check(CLI::IsMember({"1", "2", "orig"}));
  integer("--beam-width", "beam_width", "CTC beam width");
  flag("--gradient-stop", "gradient_stop", "enable stochastic gradient stopping");
  num("--gradient-stop-p", "gradient_stop_probability", "gate probability");
  flag("--kl-reversed", "kl_reversed", "use KL(teacher || student)");
  integer("--frames", "frames", "clip length used for profiling");
  integer("--latency-reps", "latency_repetitions", "timed forward passes (0 skips timing)");
  integer("--epochs", "epochs", "training epochs");
  num("--learning-rate", "learning_rate", "initial learning rate");
  integer("--batch-size", "batch_size", "clips per optimizer step");
  sub->add_option_function<std::string>(
      "--lr-drops",
      [&f](const std::string& v) {
        nlohmann::json drops = nlohmann::json::array();
        std::stringstream in(v);
        for (std::string item; std::getline(in, item, ',');) {
          if (item.empty()) continue;
          const auto colon = item.find(':');
          if (colon == std::string::npos) throw CLI::ValidationError("--lr-drops", "expected EPOCH:MULTIPLIER");
          drops.push_back({std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
        }
        f.overrides["lr_drops"] = drops.dump();
      },
      "learning-rate drops as EPOCH:MULTIPLIER,... (empty for none)");
  integer("--eval-every", "eval_every", "score the held-out split every n epochs (0: last only)");
  ints("--resolutions", "resolutions", "comma-separated student resolutions");
  ints("--seeds", "seeds", "comma-separated seeds");
  integer("--num-train", "num_train", "generated training clips");
  integer("--num-val", "num_val", "generated held-out clips");
  integer("--frames-per-gloss", "frames_per_gloss", "frames rendered per gloss");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Failure{kExitConfig, "cannot read config file " + p.string()};
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Failure{kExitRuntime, "cannot write " + p.string()};
  out << text;
}

struct Resolved {
  nlohmann::json json;
  fs::path out;
};

Resolved resolve(Config& cfg, const std::string& command, const Flags& f) {
  std::optional<nlohmann::json> file;
  if (!f.config_file.empty()) {
    try {
      file = nlohmann::json::parse(read_file(f.config_file));
    } catch (const nlohmann::json::exception& e) {
      throw Failure{kExitConfig, "config file " + f.config_file + " is not valid JSON: " + e.what()};
    }
  }
  std::string preset = "rwth-like";
  if (file && file->contains("preset") && (*file)["preset"].is_string()) preset = (*file)["preset"];
  if (!f.preset.empty()) preset = f.preset;
  check(crkd_config_from_preset(preset.c_str(), cfg.out()), "preset");
  if (file) {
    file->erase("preset");
    check(crkd_config_merge_json(cfg.get(), file->dump().c_str()), "config file");
  }
  check(crkd_config_set(cfg.get(), "command", nlohmann::json(command).dump().c_str()), "command");
  for (const auto& [key, value] : f.overrides)
    check(crkd_config_set(cfg.get(), key.c_str(), value.c_str()), "--" + key);
  check(crkd_config_validate(cfg.get()), "configuration");

  char* text = nullptr;
  check(crkd_config_to_json(cfg.get(), &text), "config");
  Resolved r;
  r.json = nlohmann::json::parse(text);
  crkd_string_free(text);
  r.out = r.json["out"].get<std::string>();
  fs::create_directories(r.out);
  write_file(r.out / "config.json", r.json.dump(2) + "\n");
  return r;
}

struct Splits {
  Dataset train;
  Dataset val;
};

void load_splits(const std::string& dir, Splits& s) {
  if (dir.empty()) throw Failure{kExitConfig, "no dataset given; pass --data DIR (see gen-data)"};
  const fs::path d(dir);
  if (fs::exists(d / "manifest.tsv")) {
    check(crkd_dataset_load(d.c_str(), s.train.out()), "dataset");
    return;
  }
  if (!fs::exists(d / "train" / "manifest.tsv"))
    throw Failure{kExitConfig, "no dataset found at " + dir + " (expected manifest.tsv or train/)"};
  check(crkd_dataset_load((d / "train").c_str(), s.train.out()), "training split");
  if (fs::exists(d / "val" / "manifest.tsv"))
    check(crkd_dataset_load((d / "val").c_str(), s.val.out()), "held-out split");
}

void print_wer(const char* label, const crkd_wer_report& r) {
  std::printf("%s WER %.2f%% (sub %d, del %d, ins %d, ref %d)\n", label, r.wer, r.substitutions,
              r.deletions, r.insertions, r.ref_length);
}

int run_command(const std::string& command, const Flags& f) {
  Config cfg;
  const Resolved r = resolve(cfg, command, f);
  const nlohmann::json& j = r.json;
  const std::string out = r.out.string();

  if (command == "gen-data") {
    check(crkd_generate_dataset(cfg.get(), out.c_str()), "gen-data");
    std::printf("wrote %s/train and %s/val\n", out.c_str(), out.c_str());
  } else if (command == "train-teacher") {
    Splits s;
    load_splits(j["data"], s);
    Model teacher;
    check(crkd_train_teacher(cfg.get(), s.train.get(), s.val.get(), out.c_str(), teacher.out()),
          "train-teacher");
    if (s.val.get()) {
      crkd_wer_report w{};
      check(crkd_evaluate(cfg.get(), teacher.get(), s.val.get(), &w), "evaluate");
      print_wer("held-out", w);
    }
    std::printf("teacher weights: %s/teacher.crkw\n", out.c_str());
  } else if (command == "distill") {
    const std::string teacher_path = j["teacher"];
    if (teacher_path.empty())
      throw Failure{kExitConfig, "distill needs a frozen teacher: pass --teacher PATH/teacher.crkw "
                                 "(produced by train-teacher)"};
    if (!fs::exists(teacher_path))
      throw Failure{kExitConfig, "teacher checkpoint " + teacher_path + " does not exist"};
    Model teacher;
    check(crkd_model_load(cfg.get(), "teacher", teacher_path.c_str(), teacher.out()), "teacher");
    Splits s;
    load_splits(j["data"], s);
    Model student;
    check(crkd_distill(cfg.get(), teacher.get(), s.train.get(), s.val.get(), out.c_str(), student.out()),
          "distill");
    if (s.val.get()) {
      crkd_wer_report w{};
      check(crkd_evaluate(cfg.get(), student.get(), s.val.get(), &w), "evaluate");
      print_wer("held-out", w);
    }
    std::printf("student weights: %s/student.crkw\n", out.c_str());
  } else if (command == "eval") {
    const std::string weights = j["weights"];
    const std::string role = j["model"];
    if (weights.empty()) throw Failure{kExitConfig, "eval needs --weights FILE"};
    Model model;
    check(crkd_model_load(cfg.get(), role.c_str(), weights.c_str(), model.out()), "weights");
    Splits s;
    load_splits(j["data"], s);
    crkd_dataset* target = s.val.get() ? s.val.get() : s.train.get();
    crkd_wer_report w{};
    check(crkd_evaluate(cfg.get(), model.get(), target, &w), "evaluate");
    print_wer(s.val.get() ? "held-out" : "dataset", w);
    std::ostringstream tsv;
    tsv << "split\tins\tdel\tsub\tref_length\twer\n"
        << (s.val.get() ? "val" : "data") << '\t' << w.insertions << '\t' << w.deletions << '\t'
        << w.substitutions << '\t' << w.ref_length << '\t' << w.wer << '\n';
    write_file(r.out / "eval.tsv", tsv.str());
  } else if (command == "profile") {
    crkd_profile_report p{};
    check(crkd_profile_write(cfg.get(), j["model"] == "teacher", out.c_str(), &p), "profile");
    std::printf("parameters %.4f M, memory %.2f MB, MACs %.3f G, frame features %dx%dx%d\n",
                p.parameters / 1e6, p.parameter_memory_mb, p.macs / 1e9, p.frame_feature_channels,
                p.frame_feature_side, p.frame_feature_side);
    if (p.latency_mean_ms > 0)
      std::printf("latency mean %.3f ms (min %.3f, max %.3f)\n", p.latency_mean_ms,
                  p.latency_min_ms, p.latency_max_ms);
  } else if (command == "compare-methods") {
    Splits s;
    load_splits(j["data"], s);
    if (!s.val.get()) throw Failure{kExitConfig, "compare-methods needs a held-out split (DIR/val)"};
    Model teacher;
    const std::string teacher_path = j["teacher"];
    if (!teacher_path.empty())
      check(crkd_model_load(cfg.get(), "teacher", teacher_path.c_str(), teacher.out()), "teacher");
    check(crkd_compare_methods(cfg.get(), teacher.get(), s.train.get(), s.val.get(), out.c_str()),
          "compare-methods");
    std::cout << read_file(r.out / "deltas.tsv");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crkd: cross-resolution knowledge distillation toolkit"};
  app.require_subcommand(0, 1);
  std::string top_config;
  Flags flags;
  app.add_option("--config", top_config, "re-run the command recorded in a frozen config.json");
  app.add_option_function<std::string>(
      "--out", [&flags](const std::string& v) { flags.overrides["out"] = nlohmann::json(v).dump(); },
      "output directory for a --config re-run");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "generate a synthetic gloss-video dataset (train/ and val/)"},
      {"train-teacher", "train and freeze the reference teacher"},
      {"distill", "distil a student from a frozen teacher"},
      {"eval", "center-crop WER of a weights file"},
      {"profile", "analytic parameter / MAC profile (optionally timed)"},
      {"compare-methods", "original vs method 1 vs method 2 across resolutions and seeds"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    subs.push_back(sub);
  }
  for (CLI::App* sub : subs) {
    if (sub->get_name() == "eval" || sub->get_name() == "profile") {
      sub->add_option_function<std::string>(
             "--model", [&flags](const std::string& v) { flags.overrides["model"] = nlohmann::json(v).dump(); },
             "teacher or student")
          ->check(CLI::IsMember({"teacher", "student"}));
    }
    if (sub->get_name() == "eval") {
      sub->add_option_function<std::string>(
          "--weights", [&flags](const std::string& v) { flags.overrides["weights"] = nlohmann::json(v).dump(); },
          "weights file");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    std::string command;
    for (CLI::App* sub : subs)
      if (sub->parsed()) command = sub->get_name();
    if (command.empty()) {
      if (top_config.empty()) {
        std::cerr << app.help();
        return kExitConfig;
      }
      const nlohmann::json j = nlohmann::json::parse(read_file(top_config));
      if (!j.contains("command") || !j["command"].is_string())
        throw Failure{kExitConfig, "config " + top_config + " records no command"};
      command = j["command"];
      bool known = false;
      for (const auto& c : commands) known = known || c.first == command;
      if (!known) throw Failure{kExitConfig, "config records unknown command '" + command + "'"};
      flags.config_file = top_config;
    }
    return run_command(command, flags);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.exit_code;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
