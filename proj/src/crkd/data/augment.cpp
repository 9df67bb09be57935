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

#include <cmath>

#include "crkd/common/error.hpp"
#include "crkd/common/resize.hpp"
#include "crkd/data/dataset.hpp"

namespace crkd::data {

void AugmentPolicy::validate() const {
  require(crop_target >= 1 && crop_target <= crop_source,
          "crop_target must lie in [1, crop_source]");
  require(flip_probability >= 0.0 && flip_probability <= 1.0,
          "flip_probability must lie in [0, 1]");
  require(temporal_scale_bound >= 0.0 && temporal_scale_bound < 1.0,
          "temporal_scale_bound must lie in [0, 1)");
}

AugmentPolicy AugmentPolicy::centered() const {
  AugmentPolicy p = *this;
  p.center_crop_only = true;
  return p;
}

std::pair<int, int> temporal_length_bounds(int length, double bound) {
  // the epsilon keeps exact products such as 100 * 0.8 from rounding outward
  int lo = static_cast<int>(std::ceil(length * (1.0 - bound) - 1e-9));
  int hi = static_cast<int>(std::floor(length * (1.0 + bound) + 1e-9));
  lo = std::max(lo, 1);
  hi = std::max(hi, lo);
  return {lo, hi};
}

VideoSample augment_sequence(const VideoSample& sample,
                             const AugmentPolicy& policy, Rng& rng,
                             AugmentRecord* record) {
  policy.validate();
  const Shape& s = sample.frames.shape();
  if (policy.crop_target > s.h || policy.crop_target > s.w) {
    fail(ErrorCode::kInvalidArgument,
         "crop_target " + std::to_string(policy.crop_target) +
             " exceeds frame size " + std::to_string(s.h) + "x" +
             std::to_string(s.w));
  }

  AugmentRecord rec;
  rec.source_length = s.t;
  const int target = policy.crop_target;
  if (policy.center_crop_only) {
    rec.crop_y = (s.h - target) / 2;
    rec.crop_x = (s.w - target) / 2;
    rec.output_length = s.t;
  } else {
    // one draw of each decision per sequence, in a fixed order
    rec.crop_y = rng.uniform_int(0, s.h - target);
    rec.crop_x = rng.uniform_int(0, s.w - target);
    rec.flipped = rng.bernoulli(policy.flip_probability);
    const auto [lo, hi] = temporal_length_bounds(s.t, policy.temporal_scale_bound);
    rec.output_length = policy.temporal_scale_bound > 0.0 ? rng.uniform_int(lo, hi)
                                                          : s.t;
  }

  rec.frame_map.resize(rec.output_length);
  for (int i = 0; i < rec.output_length; ++i) {
    const double src = (i + 0.5) * s.t / rec.output_length;
    rec.frame_map[i] = std::min(s.t - 1, static_cast<int>(std::floor(src)));
  }

  VideoSample out;
  out.id = sample.id;
  out.glosses = sample.glosses;
  out.frames = Tensor(Shape{rec.output_length, s.c, target, target});
  for (int t = 0; t < rec.output_length; ++t) {
    const int src_t = rec.frame_map[t];
    for (int c = 0; c < s.c; ++c) {
      const double* src = sample.frames.plane(src_t, c);
      double* dst = out.frames.plane(t, c);
      for (int y = 0; y < target; ++y) {
        const double* row = src + (y + rec.crop_y) * s.w + rec.crop_x;
        double* drow = dst + y * target;
        if (rec.flipped) {
          for (int x = 0; x < target; ++x) drow[x] = row[target - 1 - x];
        } else {
          for (int x = 0; x < target; ++x) drow[x] = row[x];
        }
      }
    }
  }
  if (record) *record = std::move(rec);
  return out;
}

VideoSample rescale_resolution(const VideoSample& sample, int target) {
  require(target >= 1, "rescale target must be at least 1");
  VideoSample out;
  out.id = sample.id;
  out.glosses = sample.glosses;
  out.frames = resize_bilinear(sample.frames, target, target);
  return out;
}

}  // namespace crkd::data
