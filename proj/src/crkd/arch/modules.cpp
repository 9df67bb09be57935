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

#include "crkd/arch/modules.hpp"

#include <Eigen/Core>
#include <cmath>

#include "crkd/common/error.hpp"
#include "crkd/common/resize.hpp"

namespace crkd::arch {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Parameter make_param(const std::string& layer_id, std::string name, std::vector<int> dims,
                     double fill, bool learnable = true) {
  Parameter p;
  p.layer_id = layer_id;
  p.name = std::move(name);
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  p.dims = std::move(dims);
  p.value.assign(n, fill);
  p.grad.assign(learnable ? n : 0, 0.0);
  p.learnable = learnable;
  return p;
}

void init_normal(Parameter& p, double stddev, Rng& rng) {
  for (double& v : p.value) v = static_cast<double>(static_cast<float>(stddev * rng.normal()));
}

}  // namespace

ConvBnRelu::ConvBnRelu(const std::string& layer_id, const std::string& prefix,
                       const ops::ConvGeometry& geometry, bool batch_norm_relu, Rng& rng)
    : geometry_(geometry), bn_relu_(batch_norm_relu) {
  const int co = geometry.out_channels;
  const std::string p = prefix.empty() ? "" : prefix + ".";
  weight_ = make_param(layer_id, p + "weight",
                       {co, geometry.in_channels, geometry.kernel.h, geometry.kernel.w}, 0.0);
  init_normal(weight_, std::sqrt(2.0 / geometry.fan_in()), rng);
  bias_ = make_param(layer_id, p + "bias", {co}, 0.0);
  if (bn_relu_) {
    gamma_ = make_param(layer_id, p + "bn.gamma", {co}, 1.0);
    beta_ = make_param(layer_id, p + "bn.beta", {co}, 0.0);
    running_mean_ = make_param(layer_id, p + "bn.running_mean", {co}, 0.0, false);
    running_var_ = make_param(layer_id, p + "bn.running_var", {co}, 1.0, false);
  }
}

void ConvBnRelu::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
  if (bn_relu_) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }
}

Tensor ConvBnRelu::forward(const Tensor& x, Mode mode) {
  mode_ = mode;
  input_ = x;
  Tensor y = ops::conv2d_forward(x, weight_.value.data(), bias_.value.data(), geometry_);
  if (!bn_relu_) return y;

  const Shape& s = y.shape();
  const std::size_t plane = s.plane_size();
  const double count = static_cast<double>(s.t) * plane;
  inv_std_.assign(s.c, 0.0);
  normalized_ = Tensor(s);
  for (int c = 0; c < s.c; ++c) {
    double mean;
    double var;
    if (mode == Mode::kTrain) {
      double sum = 0.0;
      for (int t = 0; t < s.t; ++t) {
        const double* v = y.plane(t, c);
        for (std::size_t i = 0; i < plane; ++i) sum += v[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (int t = 0; t < s.t; ++t) {
        const double* v = y.plane(t, c);
        for (std::size_t i = 0; i < plane; ++i) sq += (v[i] - mean) * (v[i] - mean);
      }
      var = sq / count;
      const double unbiased = count > 1.0 ? sq / (count - 1.0) : var;
      running_mean_.value[c] = static_cast<float>((1.0 - kMomentum) * running_mean_.value[c] +
                                                  kMomentum * mean);
      running_var_.value[c] = static_cast<float>((1.0 - kMomentum) * running_var_.value[c] +
                                                 kMomentum * unbiased);
    } else {
      mean = running_mean_.value[c];
      var = running_var_.value[c];
    }
    const double inv = 1.0 / std::sqrt(var + kEpsilon);
    inv_std_[c] = inv;
    const double g = gamma_.value[c];
    const double b = beta_.value[c];
    for (int t = 0; t < s.t; ++t) {
      double* v = y.plane(t, c);
      double* n = normalized_.plane(t, c);
      for (std::size_t i = 0; i < plane; ++i) {
        n[i] = (v[i] - mean) * inv;
        const double out = g * n[i] + b;
        v[i] = out < 0.0 ? 0.0 : out;  // keeps NaN
      }
    }
  }
  activated_ = y;
  return y;
}

Tensor ConvBnRelu::backward(const Tensor& grad_output) {
  Tensor dconv;
  if (!bn_relu_) {
    dconv = grad_output;
  } else {
    const Shape& s = grad_output.shape();
    const std::size_t plane = s.plane_size();
    const double count = static_cast<double>(s.t) * plane;
    dconv = Tensor(s);
    for (int c = 0; c < s.c; ++c) {
      // gradient through ReLU, then the affine part
      double sum_dy = 0.0;
      double sum_dy_xhat = 0.0;
      for (int t = 0; t < s.t; ++t) {
        const double* g = grad_output.plane(t, c);
        const double* a = activated_.plane(t, c);
        const double* n = normalized_.plane(t, c);
        double* d = dconv.plane(t, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double dy = a[i] > 0.0 ? g[i] : 0.0;
          d[i] = dy;
          sum_dy += dy;
          sum_dy_xhat += dy * n[i];
        }
      }
      gamma_.grad[c] += sum_dy_xhat;
      beta_.grad[c] += sum_dy;
      const double gscale = gamma_.value[c] * inv_std_[c];
      for (int t = 0; t < s.t; ++t) {
        const double* n = normalized_.plane(t, c);
        double* d = dconv.plane(t, c);
        if (mode_ == Mode::kTrain) {
          for (std::size_t i = 0; i < plane; ++i)
            d[i] = gscale * (d[i] - sum_dy / count - n[i] * sum_dy_xhat / count);
        } else {
          for (std::size_t i = 0; i < plane; ++i) d[i] *= gscale;
        }
      }
    }
  }
  Tensor dx;
  ops::conv2d_backward(input_, weight_.value.data(), geometry_, dconv, &dx,
                       weight_.grad.data(), bias_.grad.data());
  return dx;
}

Tensor MaxPool2d::forward(const Tensor& x, Mode) {
  input_shape_ = x.shape();
  return ops::maxpool2d_forward(x, {2, 2}, {2, 2}, argmax_);
}

Tensor MaxPool2d::backward(const Tensor& grad_output) {
  return ops::pool_backward(input_shape_, grad_output, argmax_);
}

Tensor MaxPoolTemporal::forward(const Tensor& x, Mode) {
  input_shape_ = x.shape();
  return ops::maxpool_temporal_forward(x, argmax_);
}

Tensor MaxPoolTemporal::backward(const Tensor& grad_output) {
  return ops::pool_backward(input_shape_, grad_output, argmax_);
}

Tensor TemporalShift::forward(const Tensor& x, Mode) {
  return ops::temporal_shift(x, forward_, backward_);
}

Tensor TemporalShift::backward(const Tensor& grad_output) {
  return ops::temporal_shift(grad_output, forward_, backward_, /*reverse=*/true);
}

Bottleneck::Bottleneck(const LayerSpec& spec, Rng& rng)
    : residual_(spec.kind == LayerKind::kResidualBottleneck),
      reduce_(spec.id, "reduce",
              {spec.in_channels, spec.middle_channels, {1, 1}, {1, 1}, {0, 0}}, true, rng),
      middle_(spec.id, "middle",
              {spec.middle_channels, spec.middle_channels, spec.kernel, {1, 1}, spec.padding},
              true, rng),
      expand_(spec.id, "expand",
              {spec.middle_channels, spec.out_channels, {1, 1}, {1, 1}, {0, 0}}, true, rng) {
  if (residual_) shift_ = std::make_unique<TemporalShift>(spec.shift_forward, spec.shift_backward);
}

Tensor Bottleneck::forward(const Tensor& x, Mode mode) {
  Tensor h = reduce_.forward(x, mode);
  if (shift_) h = shift_->forward(h, mode);
  h = middle_.forward(h, mode);
  h = expand_.forward(h, mode);
  if (residual_) h.add(x);
  return h;
}

Tensor Bottleneck::backward(const Tensor& grad_output) {
  Tensor g = expand_.backward(grad_output);
  g = middle_.backward(g);
  if (shift_) g = shift_->backward(g);
  g = reduce_.backward(g);
  if (residual_) g.add(grad_output);
  return g;
}

void Bottleneck::collect(std::vector<Parameter*>& out) {
  reduce_.collect(out);
  middle_.collect(out);
  expand_.collect(out);
}

Tensor UpsampleBilinear::forward(const Tensor& x, Mode) {
  input_shape_ = x.shape();
  return resize_bilinear(x, out_h_, out_w_);
}

Tensor UpsampleBilinear::backward(const Tensor& grad_output) {
  return resize_bilinear_backward(grad_output, input_shape_.h, input_shape_.w);
}

Tensor GlobalAvgPool::forward(const Tensor& x, Mode) {
  input_shape_ = x.shape();
  const Shape& s = x.shape();
  Tensor out(Shape{s.t, s.c, 1, 1});
  const std::size_t plane = s.plane_size();
  for (int t = 0; t < s.t; ++t) {
    for (int c = 0; c < s.c; ++c) {
      const double* v = x.plane(t, c);
      double sum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum += v[i];
      out.at(t, c, 0, 0) = sum / static_cast<double>(plane);
    }
  }
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_output) {
  const Shape& s = input_shape_;
  Tensor dx(s);
  const std::size_t plane = s.plane_size();
  const double inv = 1.0 / static_cast<double>(plane);
  for (int t = 0; t < s.t; ++t) {
    for (int c = 0; c < s.c; ++c) {
      const double g = grad_output.at(t, c, 0, 0) * inv;
      double* d = dx.plane(t, c);
      for (std::size_t i = 0; i < plane; ++i) d[i] = g;
    }
  }
  return dx;
}

FullyConnected::FullyConnected(const std::string& layer_id, int in, int out, Rng& rng)
    : in_(in), out_(out) {
  weight_ = make_param(layer_id, "weight", {out, in}, 0.0);
  init_normal(weight_, std::sqrt(1.0 / in), rng);
  bias_ = make_param(layer_id, "bias", {out}, 0.0);
}

void FullyConnected::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

Tensor FullyConnected::forward(const Tensor& x, Mode) {
  const Shape& s = x.shape();
  require(s.c == in_ && s.h == 1 && s.w == 1,
          "fully-connected expects T x " + std::to_string(in_) + " x 1 x 1, got " + s.str());
  input_ = x;
  Tensor out(Shape{s.t, out_, 1, 1});
  Eigen::Map<const RowMat> X(x.data(), s.t, in_);
  Eigen::Map<const RowMat> W(weight_.value.data(), out_, in_);
  Eigen::Map<const Eigen::RowVectorXd> b(bias_.value.data(), out_);
  Eigen::Map<RowMat> Y(out.data(), s.t, out_);
  Y.noalias() = X * W.transpose();
  Y.rowwise() += b;
  return out;
}

Tensor FullyConnected::backward(const Tensor& grad_output) {
  const int T = input_.shape().t;
  Eigen::Map<const RowMat> X(input_.data(), T, in_);
  Eigen::Map<const RowMat> W(weight_.value.data(), out_, in_);
  Eigen::Map<const RowMat> dY(grad_output.data(), T, out_);
  Eigen::Map<RowMat> dW(weight_.grad.data(), out_, in_);
  Eigen::Map<Eigen::RowVectorXd> db(bias_.grad.data(), out_);
  dW.noalias() += dY.transpose() * X;
  db += dY.colwise().sum();
  Tensor dx(input_.shape());
  Eigen::Map<RowMat> dX(dx.data(), T, in_);
  dX.noalias() = dY * W;
  return dx;
}

Tensor LogSoftmax::forward(const Tensor& x, Mode) {
  const Shape& s = x.shape();
  output_ = Tensor(s);
  const std::size_t n = s.frame_size();
  for (int t = 0; t < s.t; ++t) {
    const double* v = x.frame(t);
    double* o = output_.frame(t);
    double mx = v[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, v[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(v[i] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t i = 0; i < n; ++i) o[i] = v[i] - lse;
  }
  return output_;
}

Tensor LogSoftmax::backward(const Tensor& grad_output) {
  const Shape& s = output_.shape();
  Tensor dx(s);
  const std::size_t n = s.frame_size();
  for (int t = 0; t < s.t; ++t) {
    const double* g = grad_output.frame(t);
    const double* o = output_.frame(t);
    double* d = dx.frame(t);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += g[i];
    for (std::size_t i = 0; i < n; ++i) d[i] = g[i] - std::exp(o[i]) * sum;
  }
  return dx;
}

std::unique_ptr<Module> make_module(const LayerSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case LayerKind::kConv2d:
      return std::make_unique<ConvBnRelu>(
          spec.id, "",
          ops::ConvGeometry{spec.in_channels, spec.out_channels, spec.kernel, spec.stride,
                            spec.padding},
          spec.batch_norm_relu, rng);
    case LayerKind::kMaxPool2d: return std::make_unique<MaxPool2d>();
    case LayerKind::kMaxPoolTemporal: return std::make_unique<MaxPoolTemporal>();
    case LayerKind::kTscmShift:
      return std::make_unique<TemporalShift>(spec.shift_forward, spec.shift_backward);
    case LayerKind::kBottleneck:
    case LayerKind::kResidualBottleneck: return std::make_unique<Bottleneck>(spec, rng);
    case LayerKind::kUpsampleBilinear:
      return std::make_unique<UpsampleBilinear>(spec.kernel.h, spec.kernel.w);
    case LayerKind::kGlobalAvgPool: return std::make_unique<GlobalAvgPool>();
    case LayerKind::kFullyConnected:
      return std::make_unique<FullyConnected>(spec.id, spec.in_channels, spec.out_channels, rng);
    case LayerKind::kSoftmax: return std::make_unique<LogSoftmax>();
  }
  fail(ErrorCode::kInvalidArgument, "unknown layer kind");
}

}  // namespace crkd::arch
