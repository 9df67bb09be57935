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

#include "crkd/arch/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "crkd/common/error.hpp"

namespace crkd::arch::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Upper bound on im2col scratch (doubles) when batching frames into one GEMM.
constexpr std::size_t kColumnBudget = std::size_t{1} << 21;

int frames_per_chunk(const ConvGeometry& g, const Shape& out, int frames) {
  const std::size_t per_frame = static_cast<std::size_t>(g.fan_in()) * out.plane_size();
  return static_cast<int>(std::clamp<std::size_t>(kColumnBudget / std::max<std::size_t>(per_frame, 1),
                                                  1, static_cast<std::size_t>(frames)));
}

void im2col(const Tensor& x, int t0, int nb, const ConvGeometry& g, const Shape& out,
            RowMat& cols) {
  const Shape& in = x.shape();
  const int P = out.h * out.w;
  cols.resize(g.fan_in(), static_cast<Eigen::Index>(nb) * P);
  for (int ci = 0; ci < g.in_channels; ++ci) {
    for (int ky = 0; ky < g.kernel.h; ++ky) {
      for (int kx = 0; kx < g.kernel.w; ++kx) {
        double* row = cols.row((ci * g.kernel.h + ky) * g.kernel.w + kx).data();
        for (int j = 0; j < nb; ++j) {
          const double* src = x.plane(t0 + j, ci);
          double* dst = row + static_cast<std::size_t>(j) * P;
          for (int oy = 0; oy < out.h; ++oy) {
            const int iy = oy * g.stride.h - g.padding.h + ky;
            double* drow = dst + oy * out.w;
            if (iy < 0 || iy >= in.h) {
              std::fill(drow, drow + out.w, 0.0);
              continue;
            }
            const double* srow = src + iy * in.w;
            for (int ox = 0; ox < out.w; ++ox) {
              const int ix = ox * g.stride.w - g.padding.w + kx;
              drow[ox] = (ix >= 0 && ix < in.w) ? srow[ix] : 0.0;
            }
          }
        }
      }
    }
  }
}

void col2im(const RowMat& cols, int t0, int nb, const ConvGeometry& g, const Shape& out,
            Tensor& dx) {
  const Shape& in = dx.shape();
  const int P = out.h * out.w;
  for (int ci = 0; ci < g.in_channels; ++ci) {
    for (int ky = 0; ky < g.kernel.h; ++ky) {
      for (int kx = 0; kx < g.kernel.w; ++kx) {
        const double* row = cols.row((ci * g.kernel.h + ky) * g.kernel.w + kx).data();
        for (int j = 0; j < nb; ++j) {
          double* dst = dx.plane(t0 + j, ci);
          const double* src = row + static_cast<std::size_t>(j) * P;
          for (int oy = 0; oy < out.h; ++oy) {
            const int iy = oy * g.stride.h - g.padding.h + ky;
            if (iy < 0 || iy >= in.h) continue;
            double* drow = dst + iy * in.w;
            const double* srow = src + oy * out.w;
            for (int ox = 0; ox < out.w; ++ox) {
              const int ix = ox * g.stride.w - g.padding.w + kx;
              if (ix >= 0 && ix < in.w) drow[ix] += srow[ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

Shape ConvGeometry::output_shape(const Shape& in) const {
  require(in.c == in_channels, "conv2d: expected " + std::to_string(in_channels) +
                                   " input channels, got " + in.str());
  const int oh = (in.h + 2 * padding.h - kernel.h) / stride.h + 1;
  const int ow = (in.w + 2 * padding.w - kernel.w) / stride.w + 1;
  require(oh >= 1 && ow >= 1, "conv2d: kernel larger than padded input " + in.str());
  return {in.t, out_channels, oh, ow};
}

Tensor conv2d_forward(const Tensor& x, const double* weight, const double* bias,
                      const ConvGeometry& g) {
  const Shape out_shape = g.output_shape(x.shape());
  Tensor out(out_shape);
  const int P = out_shape.h * out_shape.w;
  const int T = out_shape.t;
  const int nb_max = frames_per_chunk(g, out_shape, T);
  Eigen::Map<const RowMat> W(weight, g.out_channels, g.fan_in());
  RowMat cols;
  RowMat Y;
  for (int t0 = 0; t0 < T; t0 += nb_max) {
    const int nb = std::min(nb_max, T - t0);
    im2col(x, t0, nb, g, out_shape, cols);
    Y.noalias() = W * cols;
    for (int j = 0; j < nb; ++j) {
      for (int o = 0; o < g.out_channels; ++o) {
        const double* src = Y.row(o).data() + static_cast<std::size_t>(j) * P;
        double* dst = out.plane(t0 + j, o);
        const double b = bias ? bias[o] : 0.0;
        for (int p = 0; p < P; ++p) dst[p] = src[p] + b;
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& x, const double* weight, const ConvGeometry& g,
                     const Tensor& dy, Tensor* dx, double* dweight, double* dbias) {
  const Shape out_shape = g.output_shape(x.shape());
  require(dy.shape() == out_shape, "conv2d backward: gradient shape " + dy.shape().str() +
                                       " does not match output " + out_shape.str());
  const int P = out_shape.h * out_shape.w;
  const int T = out_shape.t;
  const int nb_max = frames_per_chunk(g, out_shape, T);
  Eigen::Map<const RowMat> W(weight, g.out_channels, g.fan_in());
  Eigen::Map<RowMat> dW(dweight, g.out_channels, g.fan_in());
  if (dx) *dx = Tensor(x.shape());
  RowMat cols;
  RowMat dY;
  RowMat dcols;
  for (int t0 = 0; t0 < T; t0 += nb_max) {
    const int nb = std::min(nb_max, T - t0);
    dY.resize(g.out_channels, static_cast<Eigen::Index>(nb) * P);
    for (int j = 0; j < nb; ++j) {
      for (int o = 0; o < g.out_channels; ++o) {
        const double* src = dy.plane(t0 + j, o);
        std::copy(src, src + P, dY.row(o).data() + static_cast<std::size_t>(j) * P);
      }
    }
    im2col(x, t0, nb, g, out_shape, cols);
    dW.noalias() += dY * cols.transpose();
    if (dbias) {
      for (int o = 0; o < g.out_channels; ++o) dbias[o] += dY.row(o).sum();
    }
    if (dx) {
      dcols.noalias() = W.transpose() * dY;
      col2im(dcols, t0, nb, g, out_shape, *dx);
    }
  }
}

Tensor maxpool2d_forward(const Tensor& x, Window kernel, Window stride,
                         std::vector<std::size_t>& argmax) {
  const Shape& in = x.shape();
  const Shape out_shape{in.t, in.c, (in.h - kernel.h) / stride.h + 1,
                        (in.w - kernel.w) / stride.w + 1};
  require(out_shape.h >= 1 && out_shape.w >= 1, "maxpool2d: input " + in.str() + " too small");
  Tensor out(out_shape);
  argmax.resize(out.size());
  std::size_t k = 0;
  for (int t = 0; t < in.t; ++t) {
    for (int c = 0; c < in.c; ++c) {
      const double* src = x.plane(t, c);
      const std::size_t base = src - x.data();
      double* dst = out.plane(t, c);
      for (int oy = 0; oy < out_shape.h; ++oy) {
        for (int ox = 0; ox < out_shape.w; ++ox, ++k) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_i = 0;
          for (int ky = 0; ky < kernel.h; ++ky) {
            for (int kx = 0; kx < kernel.w; ++kx) {
              const std::size_t i = (oy * stride.h + ky) * in.w + ox * stride.w + kx;
              // NaN wins so corrupt inputs surface as a non-finite loss
              if (src[i] > best || (std::isnan(src[i]) && !std::isnan(best))) {
                best = src[i];
                best_i = i;
              }
            }
          }
          dst[oy * out_shape.w + ox] = best;
          argmax[k] = base + best_i;
        }
      }
    }
  }
  return out;
}

Tensor maxpool_temporal_forward(const Tensor& x, std::vector<std::size_t>& argmax) {
  const Shape& in = x.shape();
  require(in.t >= 2, "temporal max pooling needs at least 2 frames, got " + in.str());
  Tensor out(Shape{in.t / 2, in.c, in.h, in.w});
  argmax.resize(out.size());
  const std::size_t fs = in.frame_size();
  for (int t = 0; t < in.t / 2; ++t) {
    const double* a = x.frame(2 * t);
    const double* b = x.frame(2 * t + 1);
    double* dst = out.frame(t);
    const std::size_t base = static_cast<std::size_t>(2 * t) * fs;
    for (std::size_t i = 0; i < fs; ++i) {
      const bool second = b[i] > a[i] || (std::isnan(b[i]) && !std::isnan(a[i]));
      dst[i] = second ? b[i] : a[i];
      argmax[t * fs + i] = base + i + (second ? fs : 0);
    }
  }
  return out;
}

Tensor pool_backward(const Shape& input_shape, const Tensor& dy,
                     const std::vector<std::size_t>& argmax) {
  require(argmax.size() == dy.size(), "pool backward: gradient does not match cached forward");
  Tensor dx(input_shape);
  const double* g = dy.data();
  double* d = dx.data();
  for (std::size_t k = 0; k < argmax.size(); ++k) d[argmax[k]] += g[k];
  return dx;
}

Tensor temporal_shift(const Tensor& x, double forward_fraction, double backward_fraction,
                      bool reverse) {
  require(forward_fraction >= 0.0 && backward_fraction >= 0.0 &&
              forward_fraction + backward_fraction <= 1.0,
          "temporal shift fractions must be non-negative and sum to at most 1");
  const Shape& s = x.shape();
  const int fwd = static_cast<int>(std::floor(s.c * forward_fraction));
  const int bwd = static_cast<int>(std::floor(s.c * backward_fraction));
  Tensor out(s);
  const std::size_t plane = s.plane_size();
  for (int t = 0; t < s.t; ++t) {
    for (int c = 0; c < s.c; ++c) {
      // delay: out[t] = x[t-1]; advance: out[t] = x[t+1]; the adjoint swaps them
      int offset = 0;
      if (c < fwd) offset = -1;
      else if (c < fwd + bwd) offset = 1;
      if (reverse) offset = -offset;
      const int src_t = t + offset;
      double* dst = out.plane(t, c);
      if (src_t < 0 || src_t >= s.t) continue;
      const double* src = x.plane(src_t, c);
      std::copy(src, src + plane, dst);
    }
  }
  return out;
}

}  // namespace crkd::arch::ops
