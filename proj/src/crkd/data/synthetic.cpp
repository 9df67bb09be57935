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
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "crkd/common/error.hpp"
#include "crkd/data/dataset.hpp"

namespace crkd::data {
namespace {

enum class MotifShape { kSquare, kDisc, kRing, kCross };

struct Motif {
  MotifShape shape;
  std::array<double, 3> color;
  int trajectory;
  double radius;  // fraction of the frame side
  double speed;
};

constexpr std::array<std::array<double, 3>, 6> kPalette = {{
    {0.90, 0.20, 0.20},
    {0.20, 0.85, 0.25},
    {0.25, 0.35, 0.95},
    {0.90, 0.85, 0.20},
    {0.85, 0.25, 0.85},
    {0.20, 0.85, 0.85},
}};

// Mixed-radix decomposition of the gloss index; covers 4*6*6*3*3 = 1296
// distinct motifs before wrapping. Shape and colour vary fastest so small
// vocabularies differ in appearance, which horizontal flips preserve.
Motif motif_for(int gloss) {
  int m = gloss - 1;
  Motif motif;
  motif.shape = static_cast<MotifShape>(m % 4);
  m /= 4;
  motif.color = kPalette[m % 6];
  m /= 6;
  motif.trajectory = m % 6;
  m /= 6;
  motif.radius = std::array{0.12, 0.09, 0.15}[m % 3];
  m /= 3;
  motif.speed = std::array{1.0, 1.5, 2.0}[m % 3];
  return motif;
}

std::pair<double, double> trajectory_point(int trajectory, double u) {
  switch (trajectory) {
    case 0: return {0.25 + 0.5 * u, 0.5};
    case 1: return {0.75 - 0.5 * u, 0.5};
    case 2: return {0.5, 0.25 + 0.5 * u};
    case 3: return {0.5, 0.75 - 0.5 * u};
    case 4: return {0.25 + 0.5 * u, 0.25 + 0.5 * u};
    default: {
      const double a = 2.0 * std::numbers::pi * u;
      return {0.5 + 0.22 * std::cos(a), 0.5 + 0.22 * std::sin(a)};
    }
  }
}

bool covers(MotifShape shape, double dx, double dy, double r) {
  switch (shape) {
    case MotifShape::kSquare: return std::abs(dx) <= r && std::abs(dy) <= r;
    case MotifShape::kDisc: return dx * dx + dy * dy <= r * r;
    case MotifShape::kRing: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= 0.36 * r * r;
    }
    case MotifShape::kCross:
      return (std::abs(dx) <= 0.3 * r && std::abs(dy) <= r) ||
             (std::abs(dy) <= 0.3 * r && std::abs(dx) <= r);
  }
  return false;
}

double quantize(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return std::round(v * 255.0) / 255.0;
}

VideoSample render_sample(int index, int num_glosses, int frames_per_gloss,
                          int resolution, Rng rng) {
  VideoSample sample;
  char id[32];
  std::snprintf(id, sizeof id, "s%05d", index);
  sample.id = id;

  const int length = rng.uniform_int(3, 8);
  for (int i = 0; i < length; ++i) {
    int g = rng.uniform_int(1, num_glosses);
    // adjacent duplicates would need separating blanks; avoid them when possible
    while (num_glosses > 1 && !sample.glosses.empty() && g == sample.glosses.back())
      g = rng.uniform_int(1, num_glosses);
    sample.glosses.push_back(g);
  }

  const int total = length * frames_per_gloss;
  sample.frames = Tensor(Shape{total, 3, resolution, resolution});
  const double background = 0.06 + 0.04 * rng.uniform();
  const double side = resolution;

  for (int i = 0; i < length; ++i) {
    const Motif motif = motif_for(sample.glosses[i]);
    const double jitter_x = rng.uniform(-0.05, 0.05);
    const double jitter_y = rng.uniform(-0.05, 0.05);
    for (int f = 0; f < frames_per_gloss; ++f) {
      const int t = i * frames_per_gloss + f;
      double u = (f + 0.5) / frames_per_gloss * motif.speed;
      u -= std::floor(u);
      auto [cx, cy] = trajectory_point(motif.trajectory, u);
      cx = (cx + jitter_x) * side;
      cy = (cy + jitter_y) * side;
      const double r = motif.radius * side;
      for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
          const bool on = covers(motif.shape, x + 0.5 - cx, y + 0.5 - cy, r);
          const double noise = rng.uniform(-0.03, 0.03);
          for (int c = 0; c < 3; ++c) {
            const double v = on ? motif.color[c] : background;
            sample.frames.at(t, c, y, x) = quantize(v + noise);
          }
        }
      }
    }
  }
  return sample;
}

}  // namespace

Dataset generate_synthetic_dataset(int vocab_size, int num_samples,
                                   int frames_per_gloss, int resolution,
                                   std::uint64_t seed) {
  require(vocab_size >= 2, "vocab_size must be at least 2 (blank plus one gloss)");
  require(num_samples > 0, "num_samples must be positive");
  require(frames_per_gloss > 0, "frames_per_gloss must be positive");
  require(resolution >= 56, "resolution must be at least 56");

  Dataset dataset;
  dataset.vocab = GlossVocabulary::synthetic(vocab_size);
  dataset.samples.reserve(num_samples);
  Rng root(seed);
  for (int i = 0; i < num_samples; ++i) {
    dataset.samples.push_back(render_sample(i, vocab_size - 1, frames_per_gloss,
                                            resolution, root.fork(i)));
  }
  return dataset;
}

}  // namespace crkd::data
