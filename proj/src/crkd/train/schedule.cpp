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

#include "crkd/common/error.hpp"
#include "crkd/train/train.hpp"

namespace crkd::train {

void TrainingSchedule::validate() const {
  auto cfg = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorCode::kConfiguration, msg);
  };
  cfg(learning_rate > 0.0, "learning_rate must be positive");
  cfg(weight_decay >= 0.0, "weight_decay must be non-negative");
  cfg(batch_size >= 1, "batch_size must be at least 1");
  cfg(epochs >= 1, "epochs must be at least 1");
  int previous = -1;
  for (const auto& [epoch, multiplier] : lr_drops) {
    cfg(epoch > previous, "lr_drops epochs must be strictly increasing");
    cfg(epoch >= 0 && epoch < epochs, "lr_drops epoch " + std::to_string(epoch) +
                                          " outside [0, " + std::to_string(epochs) + ")");
    cfg(multiplier > 0.0 && multiplier <= 1.0, "lr_drops multipliers must lie in (0, 1]");
    previous = epoch;
  }
}

double TrainingSchedule::rate_at(int epoch) const {
  double rate = learning_rate;
  for (const auto& [at, multiplier] : lr_drops)
    if (epoch >= at) rate *= multiplier;
  return rate;
}

TrainingSchedule TrainingSchedule::rwth_like() { return {}; }

TrainingSchedule TrainingSchedule::csl_like() {
  TrainingSchedule s;
  s.epochs = 30;
  s.lr_drops = {{20, 0.1}};
  return s;
}

TrainingSchedule TrainingSchedule::toy() {
  TrainingSchedule s;
  s.learning_rate = 1e-3;
  s.batch_size = 2;
  s.epochs = 20;
  s.lr_drops = {{14, 0.2}};
  return s;
}

}  // namespace crkd::train
