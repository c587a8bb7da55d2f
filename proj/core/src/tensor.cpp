// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace autoqnn {

namespace {
bool g_allow_nonfinite = false;

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw std::invalid_argument("tensor: shape " + shape_to_string(shape_) +
                                " expects " + std::to_string(shape_numel(shape_)) +
                                " values, got " + std::to_string(data_.size()));
  }
  if (!g_allow_nonfinite) {
    for (float v : data_) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("tensor: non-finite value rejected");
      }
    }
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<float>(n, 0.0f));
}

Tensor Tensor::full(std::vector<std::size_t> shape, float value) {
  std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<float>(n, value));
}

Tensor Tensor::scalar(float value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<float> data) {
  std::size_t n = data.size();
  return Tensor({n}, std::move(data));
}

float Tensor::at(std::size_t flat_index) const {
  if (flat_index >= data_.size()) {
    throw std::out_of_range("tensor: index " + std::to_string(flat_index) +
                            " out of range for " + std::to_string(data_.size()) +
                            " elements");
  }
  return data_[flat_index];
}

float Tensor::item() const {
  if (data_.size() != 1) {
    throw std::invalid_argument("tensor: item() requires one element, have " +
                                std::to_string(data_.size()));
  }
  return data_[0];
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

void Tensor::allow_nonfinite(bool allow) { g_allow_nonfinite = allow; }
bool Tensor::nonfinite_allowed() { return g_allow_nonfinite; }

std::string shape_to_string(std::span<const std::size_t> shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

}  // namespace autoqnn
