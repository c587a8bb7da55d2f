// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace autoqnn {

/// Dense multi-dimensional array of 32-bit reals, row-major.
///
/// Tensors are immutable values in spirit: every op returns a new tensor.
/// Construction rejects NaN/Inf unless allow_nonfinite() was toggled
/// (useful when inspecting a diverged run).
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<std::size_t> shape, std::vector<float> data);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, float value);
  static Tensor scalar(float value);
  static Tensor vector(std::vector<float> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool is_scalar() const { return data_.size() == 1; }

  std::span<const float> data() const { return data_; }
  std::vector<float>& mutable_data() { return data_; }

  float at(std::size_t flat_index) const;
  float item() const;  // value of a one-element tensor

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

  /// Globally permit non-finite values at construction (debug aid).
  static void allow_nonfinite(bool allow);
  static bool nonfinite_allowed();

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

std::string shape_to_string(std::span<const std::size_t> shape);

}  // namespace autoqnn
