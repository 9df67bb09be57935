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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace crkd {

// Video activations are always rank 4: time x channels x height x width.
struct Shape {
  int t = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t frame_size() const {
    return static_cast<std::size_t>(c) * h * w;
  }
  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
  std::size_t size() const { return static_cast<std::size_t>(t) * frame_size(); }

  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double* frame(int t) { return data_.data() + t * shape_.frame_size(); }
  const double* frame(int t) const {
    return data_.data() + t * shape_.frame_size();
  }
  double* plane(int t, int c) { return frame(t) + c * shape_.plane_size(); }
  const double* plane(int t, int c) const {
    return frame(t) + c * shape_.plane_size();
  }

  double& at(int t, int c, int y, int x) {
    return data_[index(t, c, y, x)];
  }
  double at(int t, int c, int y, int x) const {
    return data_[index(t, c, y, x)];
  }

  void fill(double v);
  void add(const Tensor& other);
  void scale(double factor);
  double sum() const;
  double squared_norm() const;

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  std::size_t index(int t, int c, int y, int x) const {
    return ((static_cast<std::size_t>(t) * shape_.c + c) * shape_.h + y) *
               shape_.w + x;
  }

  Shape shape_;
  std::vector<double> data_;
};

// Rounds every element to the nearest float32 value. Persisted state is kept
// float32-representable so files round-trip bit-exactly.
void round_to_float32(std::span<double> values);

}  // namespace crkd
