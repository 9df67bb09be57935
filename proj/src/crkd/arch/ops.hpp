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

#include <vector>

#include "crkd/arch/graph.hpp"
#include "crkd/common/tensor.hpp"

namespace crkd::arch::ops {

struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  Window kernel;
  Window stride;
  Window padding;

  int fan_in() const { return in_channels * kernel.h * kernel.w; }
  Shape output_shape(const Shape& in) const;
};

// weight is out x in x kh x kw row-major; bias has out entries.
Tensor conv2d_forward(const Tensor& x, const double* weight, const double* bias,
                      const ConvGeometry& g);

// Accumulates into dweight / dbias; writes dx when non-null.
void conv2d_backward(const Tensor& x, const double* weight, const ConvGeometry& g,
                     const Tensor& dy, Tensor* dx, double* dweight, double* dbias);

// 2x2 / stride 2 spatial max pooling. argmax receives flat input indices.
Tensor maxpool2d_forward(const Tensor& x, Window kernel, Window stride,
                         std::vector<std::size_t>& argmax);
// Kernel 2 / stride 2 max pooling along time only.
Tensor maxpool_temporal_forward(const Tensor& x, std::vector<std::size_t>& argmax);
Tensor pool_backward(const Shape& input_shape, const Tensor& dy,
                     const std::vector<std::size_t>& argmax);

// Channel-partition temporal shift: the first floor(C*f) channels take their
// value from the previous frame, the next floor(C*b) from the following frame,
// the rest are untouched. Vacated slots are zero. `reverse` applies the
// adjoint, which is the shift in the opposite direction.
Tensor temporal_shift(const Tensor& x, double forward_fraction,
                      double backward_fraction, bool reverse = false);

}  // namespace crkd::arch::ops
