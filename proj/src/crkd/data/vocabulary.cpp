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
#include <cstdio>
#include <set>

#include "crkd/common/error.hpp"
#include "crkd/data/dataset.hpp"

namespace crkd::data {

GlossVocabulary::GlossVocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  require(!tokens_.empty(), "vocabulary needs at least one gloss besides blank");
  std::set<std::string> seen;
  for (const auto& t : tokens_) {
    require(!t.empty() && t.find_first_of(" \t\n") == std::string::npos,
            "gloss tokens must be non-empty and contain no whitespace");
    require(seen.insert(t).second, "duplicate gloss token '" + t + "'");
  }
}

GlossVocabulary GlossVocabulary::synthetic(int size_with_blank) {
  require(size_with_blank >= 2, "vocabulary size must be at least 2 (got " +
                                    std::to_string(size_with_blank) + ")");
  std::vector<std::string> tokens;
  tokens.reserve(size_with_blank - 1);
  for (int i = 1; i < size_with_blank; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "G%03d", i);
    tokens.emplace_back(buf);
  }
  return GlossVocabulary(std::move(tokens));
}

const std::string& GlossVocabulary::token(int index) const {
  require(index >= 1 && index < size(),
          "gloss index " + std::to_string(index) + " out of range");
  return tokens_[index - 1];
}

int GlossVocabulary::index_of(const std::string& token) const {
  auto it = std::find(tokens_.begin(), tokens_.end(), token);
  if (it == tokens_.end()) fail(ErrorCode::kParse, "unknown gloss '" + token + "'");
  return static_cast<int>(it - tokens_.begin()) + 1;
}

void validate_sample(const VideoSample& sample, const GlossVocabulary& vocab) {
  const Shape& s = sample.frames.shape();
  require(s.t >= 1, "sample '" + sample.id + "' has no frames");
  require(s.c == 3, "sample '" + sample.id + "' must have 3 channels");
  require(!sample.glosses.empty(), "sample '" + sample.id + "' has no glosses");
  require(static_cast<int>(sample.glosses.size()) <= s.t,
          "sample '" + sample.id + "' has more glosses than frames");
  for (int g : sample.glosses) {
    require(g >= 1 && g < vocab.size(),
            "sample '" + sample.id + "' holds invalid gloss index " +
                std::to_string(g));
  }
}

}  // namespace crkd::data
