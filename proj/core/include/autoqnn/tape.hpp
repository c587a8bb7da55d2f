// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "autoqnn/tensor.hpp"

namespace autoqnn {

using ValueId = std::size_t;

/// A trainable value: tensor plus its accumulated gradient.
struct Parameter {
  Tensor value;
  Tensor grad;
  bool trainable = true;

  explicit Parameter(Tensor v)
      : value(std::move(v)), grad(Tensor::zeros(value.shape())) {}
  Parameter(Tensor v, bool train)
      : value(std::move(v)), grad(Tensor::zeros(value.shape())), trainable(train) {}

  void zero_grad() { grad = Tensor::zeros(value.shape()); }
};

enum class Reduction { Sum, Mean, Max, Min, Variance };

/// Reverse-mode autodiff tape over Tensor values.
///
/// Nodes are created in topological order; backward() sweeps in reverse.
/// Gradients accumulate across backward() calls until reset_grads().
/// A tape is single-threaded; independent tapes may run concurrently.
class Tape {
 public:
  ValueId leaf(Tensor value, bool requires_grad = false);

  // elementwise; second operand may be a one-element tensor (scalar broadcast)
  ValueId add(ValueId a, ValueId b);
  ValueId sub(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);
  ValueId div(ValueId a, ValueId b);
  ValueId neg(ValueId a);
  ValueId relu(ValueId a);
  ValueId sqrt(ValueId a);
  ValueId scale(ValueId a, float c);  // multiply by compile-time constant

  ValueId matmul(ValueId a, ValueId b);
  ValueId add_bias(ValueId mat, ValueId bias);  // bias broadcast over rows

  ValueId reduce(Reduction r, ValueId a);
  ValueId sum(ValueId a) { return reduce(Reduction::Sum, a); }
  ValueId mean(ValueId a) { return reduce(Reduction::Mean, a); }
  ValueId max(ValueId a) { return reduce(Reduction::Max, a); }
  ValueId min(ValueId a) { return reduce(Reduction::Min, a); }
  ValueId variance(ValueId a) { return reduce(Reduction::Variance, a); }

  ValueId softmax(ValueId a);                  // 1-D input
  ValueId index(ValueId a, std::size_t i);     // 1-D input -> scalar

  ValueId softmax_cross_entropy(ValueId logits, std::vector<int> labels);

  /// Shape-preserving forward with a declared constant backward multiplier.
  /// The true Jacobian of `forward` is ignored: grad_in = multiplier * upstream.
  ValueId custom_grad(ValueId a, const std::function<Tensor(const Tensor&)>& forward,
                      float backward_multiplier);

  /// Two-input custom node: precomputed forward value, elementwise constant
  /// backward to input a, inner product with `dvalue_db` to scalar input b.
  /// The derivative vector is kept in double so heavily cancelling inner
  /// products stay accurate.
  ValueId custom_binary(ValueId a, ValueId b, Tensor value, float mult_a,
                        std::vector<double> dvalue_db);

  const Tensor& value(ValueId id) const;
  const Tensor& grad(ValueId id) const;
  bool requires_grad(ValueId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Seed is dL/d(root); defaults to 1 for a scalar root.
  void backward(ValueId root);
  void backward(ValueId root, const Tensor& seed);

  void reset_grads();

 private:
  enum class Op {
    Leaf, Add, Sub, Mul, Div, Neg, Relu, Sqrt, Scale, Matmul, AddBias,
    Reduce, Softmax, Index, SoftmaxCE, Custom, CustomBinary
  };

  struct Node {
    Op op;
    Reduction reduction = Reduction::Sum;
    std::vector<ValueId> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    float scalar = 0.0f;            // Scale constant / Custom multiplier
    std::size_t flat_index = 0;     // Index position / arg-extremum
    std::vector<int> labels;        // SoftmaxCE
    std::vector<double> saved;      // CustomBinary dvalue_db
  };

  ValueId push(Node n);
  const Node& node(ValueId id) const;
  void check(ValueId id) const;

  std::vector<Node> nodes_;
};

}  // namespace autoqnn
