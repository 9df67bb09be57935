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

#include <memory>
#include <string>
#include <vector>

#include "crkd/arch/graph.hpp"
#include "crkd/arch/ops.hpp"
#include "crkd/common/rng.hpp"
#include "crkd/common/tensor.hpp"

namespace crkd::arch {

enum class Mode { kTrain, kEval };

// A named block of state owned by one layer. Running statistics are stored as
// non-learnable parameters so they travel with the weights file.
struct Parameter {
  std::string layer_id;
  std::string name;
  std::vector<int> dims;
  std::vector<double> value;
  std::vector<double> grad;
  bool learnable = true;

  std::string full_name() const { return layer_id + "." + name; }
};

class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& grad_output) = 0;
  virtual void collect(std::vector<Parameter*>& /*out*/) {}
};

class ConvBnRelu final : public Module {
 public:
  ConvBnRelu(const std::string& layer_id, const std::string& prefix,
             const ops::ConvGeometry& geometry, bool batch_norm_relu, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_output) override;
  void collect(std::vector<Parameter*>& out) override;

 private:
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

  ops::ConvGeometry geometry_;
  bool bn_relu_;
  Parameter weight_, bias_, gamma_, beta_, running_mean_, running_var_;
  Tensor input_;
  Tensor normalized_;
  Tensor activated_;
  std::vector<double> inv_std_;
  Mode mode_ = Mode::kTrain;
};

class MaxPool2d final : public Module {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_output) override;

 private:
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

class MaxPoolTemporal final : public Module {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_output) override;

 private:
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

class TemporalShift final : public Module {
 public:
  TemporalShift(double forward_fraction, double backward_fraction)
      : forward_(forward_fraction), backward_(backward_fraction) {}
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_output) override;

 private:
  double forward_;
  double backward_;
};

// Reduce (1x1) -> [temporal shift] -> middle (k x k) -> expand (1x1), each
// convolution followed by batch norm and ReLU, with an optional identity skip.
class Bottleneck final : public Module {
 public:
  Bottleneck(const LayerSpec& spec, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_output) override;
  void collect(std::vector<Parameter*>& out) override;

 private:
  bool residual_;
  ConvBnRelu reduce_;
  std::unique_ptr<TemporalShift> shift_;
  ConvBnRelu middle_;
  ConvBnRelu expand_;
};

class UpsampleBilinear final : public Module {
 public:
  UpsampleBilinear(int out_h, int out_w) : out_h_(out_h), out_w_(out_w) {}
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_output) override;

 private:
  int out_h_;
  int out_w_;
  Shape input_shape_;
};

class GlobalAvgPool final : public Module {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_output) override;

 private:
  Shape input_shape_;
};

class FullyConnected final : public Module {
 public:
  FullyConnected(const std::string& layer_id, int in, int out, Rng& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_output) override;
  void collect(std::vector<Parameter*>& out) override;

 private:
  int in_;
  int out_;
  Parameter weight_, bias_;
  Tensor input_;
};

// Emits natural-log probabilities; the probability view is exp of the output.
class LogSoftmax final : public Module {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_output) override;

 private:
  Tensor output_;
};

std::unique_ptr<Module> make_module(const LayerSpec& spec, Rng& rng);

}  // namespace crkd::arch
