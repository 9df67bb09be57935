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

#include <functional>

#include "crkd/arch/graph.hpp"
#include "crkd/common/error.hpp"
#include "crkd/data/dataset.hpp"
#include "crkd/train/train.hpp"
#include "doctest.h"

namespace crkd::test {

// Runs f and returns the error code it throws; fails the test if it returns.
inline ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kRuntime;
}

// A miniature pipeline: 56-pixel clips cropped to a 48-pixel teacher, a
// 24-pixel student with 3x3 frame features and 16 channels.
struct Micro {
  arch::DistillConfig config;
  train::TrainOptions options;
  data::Dataset train;
  data::Dataset heldout;
};

inline Micro micro(int samples = 6, int epochs = 1) {
  Micro m;
  arch::DistillConfig& d = m.config;
  d.student_resolution = 24;
  d.teacher_resolution = 48;
  d.feature_side = 3;
  d.channels = 16;
  d.width = 2;
  d.teacher_width = 4;
  d.vocab_size_with_blank = 4;
  d.alpha = 1.0;
  d.beta = 1.0;
  d.ctc_levels = 4;
  m.options.schedule.learning_rate = 1e-3;
  m.options.schedule.epochs = epochs;
  m.options.schedule.lr_drops.clear();
  m.options.augment.crop_source = 56;
  m.options.augment.crop_target = 48;
  m.options.seed = 11;
  m.options.beam_width = 3;
  m.train = data::generate_synthetic_dataset(4, samples, 4, 56, 5);
  m.heldout = data::generate_synthetic_dataset(4, 3, 4, 56, 6);
  return m;
}

// Tiny student for gradient checks: 16-pixel input, 2x2 features, N = 8.
inline arch::DistillConfig tiny_config() {
  arch::DistillConfig d;
  d.student_resolution = 16;
  d.teacher_resolution = 32;
  d.feature_side = 2;
  d.channels = 8;
  d.width = 2;
  d.teacher_width = 2;
  d.vocab_size_with_blank = 3;
  d.ctc_levels = 4;
  d.alpha = 3.0;
  d.beta = 2.0;
  return d;
}

}  // namespace crkd::test
