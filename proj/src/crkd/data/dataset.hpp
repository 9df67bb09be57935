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
#include <string>
#include <vector>

#include "crkd/common/rng.hpp"
#include "crkd/common/tensor.hpp"

namespace crkd::data {

// Index 0 is the CTC blank; gloss i (1-based) is tokens[i - 1].
class GlossVocabulary {
 public:
  static constexpr int kBlank = 0;

  GlossVocabulary() = default;
  explicit GlossVocabulary(std::vector<std::string> tokens);

  // Vocabulary of `size_with_blank - 1` synthetic glosses named G001...
  static GlossVocabulary synthetic(int size_with_blank);

  int size() const { return static_cast<int>(tokens_.size()) + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int index) const;
  int index_of(const std::string& token) const;

  bool operator==(const GlossVocabulary&) const = default;

 private:
  std::vector<std::string> tokens_;
};

struct VideoSample {
  std::string id;
  Tensor frames;             // T x 3 x h x w, values in [0, 1]
  std::vector<int> glosses;  // non-blank vocabulary indices

  int length() const { return frames.shape().t; }
  int resolution() const { return frames.shape().h; }
};

void validate_sample(const VideoSample& sample, const GlossVocabulary& vocab);

struct Dataset {
  GlossVocabulary vocab;
  std::vector<VideoSample> samples;
};

// Added to the seed of a generated training split to seed its validation split.
inline constexpr std::uint64_t kValidationSeedOffset = 1000003;

Dataset generate_synthetic_dataset(int vocab_size, int num_samples,
                                   int frames_per_gloss, int resolution,
                                   std::uint64_t seed);

struct AugmentPolicy {
  int crop_source = 256;
  int crop_target = 224;
  double flip_probability = 0.5;
  double temporal_scale_bound = 0.2;
  bool center_crop_only = false;

  void validate() const;
  // Evaluation policy: the same crop geometry, centered, no flip or resampling.
  AugmentPolicy centered() const;
};

// Decisions drawn for one sequence; exposed so tests can observe them.
struct AugmentRecord {
  int crop_y = 0;
  int crop_x = 0;
  bool flipped = false;
  int source_length = 0;
  int output_length = 0;
  std::vector<int> frame_map;  // output frame -> source frame
};

VideoSample augment_sequence(const VideoSample& sample,
                             const AugmentPolicy& policy, Rng& rng,
                             AugmentRecord* record = nullptr);

// Closed bounds [ceil(T(1-b)), floor(T(1+b))] for temporal resampling.
std::pair<int, int> temporal_length_bounds(int length, double bound);

VideoSample rescale_resolution(const VideoSample& sample, int target);

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Single sample tensor file (see README for the byte layout).
void write_sample_file(const std::filesystem::path& path, const Tensor& frames);
Tensor read_sample_file(const std::filesystem::path& path);

}  // namespace crkd::data
