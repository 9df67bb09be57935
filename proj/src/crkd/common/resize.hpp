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

#include "crkd/common/tensor.hpp"

namespace crkd {

// Bilinear resampling of every plane with half-pixel centers (the
// align_corners=false convention). Resizing to the same size is exact.
Tensor resize_bilinear(const Tensor& input, int out_h, int out_w);

// Adjoint of resize_bilinear: maps output gradients back onto the input grid.
Tensor resize_bilinear_backward(const Tensor& grad_output, int in_h, int in_w);

}  // namespace crkd
