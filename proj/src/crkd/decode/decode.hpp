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

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "crkd/common/logits.hpp"

namespace crkd::decode {

struct BeamConfig {
  std::size_t width = 10;
  // Symbols whose log-probability at a frame falls below this are not expanded.
  std::optional<double> prune_log_threshold;

  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();
};

// The CTC many-to-one map: merge adjacent repeats, then drop blanks (index 0).
std::vector<int> collapse(std::span<const int> path);

// Per-frame argmax (lowest index wins ties), collapsed.
std::vector<int> greedy_decode(const LogitsSequence& probs);

// CTC prefix beam search over probability rows. Hypotheses are
// (prefix, ends-in-blank) states carrying log mass; equal states merge, and
// the `width` most probable states survive each frame (ties broken by
// lexicographic prefix order, blank-ending first). The result is the prefix
// with the largest total surviving mass. With width 1 this reduces to greedy
// decoding; with unbounded width it is the exact most probable labelling.
std::vector<int> beam_search_decode(const LogitsSequence& probs, const BeamConfig& config = {});

}  // namespace crkd::decode
