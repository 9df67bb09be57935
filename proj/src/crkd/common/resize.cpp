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

#include "crkd/common/resize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "crkd/common/error.hpp"

namespace crkd {
namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> axis_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    taps[i] = {lo, std::min(lo + 1, in - 1), src - lo};
  }
  return taps;
}

}  // namespace

Tensor resize_bilinear(const Tensor& input, int out_h, int out_w) {
  const Shape& s = input.shape();
  require(out_h >= 1 && out_w >= 1, "resize target must be positive");
  const auto ty = axis_taps(s.h, out_h);
  const auto tx = axis_taps(s.w, out_w);
  Tensor out(Shape{s.t, s.c, out_h, out_w});
  for (int t = 0; t < s.t; ++t) {
    for (int c = 0; c < s.c; ++c) {
      const double* src = input.plane(t, c);
      double* dst = out.plane(t, c);
      for (int y = 0; y < out_h; ++y) {
        const Tap& a = ty[y];
        const double* r0 = src + a.lo * s.w;
        const double* r1 = src + a.hi * s.w;
        for (int x = 0; x < out_w; ++x) {
          const Tap& b = tx[x];
          const double top = r0[b.lo] * (1.0 - b.frac) + r0[b.hi] * b.frac;
          const double bottom = r1[b.lo] * (1.0 - b.frac) + r1[b.hi] * b.frac;
          dst[y * out_w + x] = top * (1.0 - a.frac) + bottom * a.frac;
        }
      }
    }
  }
  return out;
}

Tensor resize_bilinear_backward(const Tensor& grad_output, int in_h, int in_w) {
  const Shape& s = grad_output.shape();
  const auto ty = axis_taps(in_h, s.h);
  const auto tx = axis_taps(in_w, s.w);
  Tensor grad(Shape{s.t, s.c, in_h, in_w});
  for (int t = 0; t < s.t; ++t) {
    for (int c = 0; c < s.c; ++c) {
      const double* g = grad_output.plane(t, c);
      double* dst = grad.plane(t, c);
      for (int y = 0; y < s.h; ++y) {
        const Tap& a = ty[y];
        for (int x = 0; x < s.w; ++x) {
          const Tap& b = tx[x];
          const double v = g[y * s.w + x];
          dst[a.lo * in_w + b.lo] += v * (1.0 - a.frac) * (1.0 - b.frac);
          dst[a.lo * in_w + b.hi] += v * (1.0 - a.frac) * b.frac;
          dst[a.hi * in_w + b.lo] += v * a.frac * (1.0 - b.frac);
          dst[a.hi * in_w + b.hi] += v * a.frac * b.frac;
        }
      }
    }
  }
  return grad;
}

}  // namespace crkd
