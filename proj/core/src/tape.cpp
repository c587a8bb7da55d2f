// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace autoqnn {

namespace {

void require_same_or_scalar(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b) && b.numel() != 1) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a.shape_str() + " vs " + b.shape_str());
  }
}

float second_operand(const Tensor& b, std::size_t i) {
  return b.numel() == 1 ? b.at(0) : b.at(i);
}

}  // namespace

ValueId Tape::push(Node n) {
  n.grad = Tensor::zeros(n.value.shape());
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

const Tape::Node& Tape::node(ValueId id) const {
  check(id);
  return nodes_[id];
}

void Tape::check(ValueId id) const {
  if (id >= nodes_.size()) {
    throw std::out_of_range("tape: unknown value id " + std::to_string(id));
  }
}

ValueId Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

ValueId Tape::add(ValueId a, ValueId b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  require_same_or_scalar(ta, tb, "add");
  std::vector<float> out(ta.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta.at(i) + second_operand(tb, i);
  Node n;
  n.op = Op::Add;
  n.inputs = {a, b};
  n.value = Tensor(ta.shape(), std::move(out));
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

ValueId Tape::sub(ValueId a, ValueId b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  require_same_or_scalar(ta, tb, "sub");
  std::vector<float> out(ta.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta.at(i) - second_operand(tb, i);
  Node n;
  n.op = Op::Sub;
  n.inputs = {a, b};
  n.value = Tensor(ta.shape(), std::move(out));
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

ValueId Tape::mul(ValueId a, ValueId b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  require_same_or_scalar(ta, tb, "mul");
  std::vector<float> out(ta.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta.at(i) * second_operand(tb, i);
  Node n;
  n.op = Op::Mul;
  n.inputs = {a, b};
  n.value = Tensor(ta.shape(), std::move(out));
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

ValueId Tape::div(ValueId a, ValueId b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  require_same_or_scalar(ta, tb, "div");
  std::vector<float> out(ta.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta.at(i) / second_operand(tb, i);
  Node n;
  n.op = Op::Div;
  n.inputs = {a, b};
  n.value = Tensor(ta.shape(), std::move(out));
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

ValueId Tape::neg(ValueId a) {
  const Tensor& ta = node(a).value;
  std::vector<float> out(ta.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -ta.at(i);
  Node n;
  n.op = Op::Neg;
  n.inputs = {a};
  n.value = Tensor(ta.shape(), std::move(out));
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

ValueId Tape::relu(ValueId a) {
  const Tensor& ta = node(a).value;
  std::vector<float> out(ta.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta.at(i) > 0.0f ? ta.at(i) : 0.0f;
  Node n;
  n.op = Op::Relu;
  n.inputs = {a};
  n.value = Tensor(ta.shape(), std::move(out));
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

ValueId Tape::sqrt(ValueId a) {
  const Tensor& ta = node(a).value;
  std::vector<float> out(ta.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(ta.at(i));
  Node n;
  n.op = Op::Sqrt;
  n.inputs = {a};
  n.value = Tensor(ta.shape(), std::move(out));
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

ValueId Tape::scale(ValueId a, float c) {
  const Tensor& ta = node(a).value;
  std::vector<float> out(ta.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * ta.at(i);
  Node n;
  n.op = Op::Scale;
  n.inputs = {a};
  n.scalar = c;
  n.value = Tensor(ta.shape(), std::move(out));
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

ValueId Tape::matmul(ValueId a, ValueId b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (ta.shape().size() != 2 || tb.shape().size() != 2) {
    throw std::invalid_argument("matmul: expects 2-D operands, got " +
                                ta.shape_str() + " and " + tb.shape_str());
  }
  std::size_t m = ta.shape()[0], k = ta.shape()[1];
  std::size_t k2 = tb.shape()[0], nn = tb.shape()[1];
  if (k != k2) {
    throw std::invalid_argument("matmul: inner dimensions differ, " +
                                ta.shape_str() + " vs " + tb.shape_str());
  }
  std::vector<float> out(m * nn, 0.0f);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      float av = ta.at(i * k + p);
      for (std::size_t j = 0; j < nn; ++j) {
        out[i * nn + j] += av * tb.at(p * nn + j);
      }
    }
  }
  Node n;
  n.op = Op::Matmul;
  n.inputs = {a, b};
  n.value = Tensor({m, nn}, std::move(out));
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

ValueId Tape::add_bias(ValueId mat, ValueId bias) {
  const Tensor& tm = node(mat).value;
  const Tensor& tb = node(bias).value;
  if (tm.shape().size() != 2) {
    throw std::invalid_argument("add_bias: matrix must be 2-D, got " + tm.shape_str());
  }
  std::size_t rows = tm.shape()[0], cols = tm.shape()[1];
  if (tb.numel() != cols) {
    throw std::invalid_argument("add_bias: bias " + tb.shape_str() +
                                " does not match row width of " + tm.shape_str());
  }
  std::vector<float> out(tm.numel());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = tm.at(i * cols + j) + tb.at(j);
  Node n;
  n.op = Op::AddBias;
  n.inputs = {mat, bias};
  n.value = Tensor(tm.shape(), std::move(out));
  n.requires_grad = node(mat).requires_grad || node(bias).requires_grad;
  return push(std::move(n));
}

ValueId Tape::reduce(Reduction r, ValueId a) {
  const Tensor& ta = node(a).value;
  if (ta.numel() == 0) throw std::invalid_argument("reduce: empty tensor");
  Node n;
  n.op = Op::Reduce;
  n.reduction = r;
  n.inputs = {a};
  n.requires_grad = node(a).requires_grad;
  double acc = 0.0;
  switch (r) {
    case Reduction::Sum:
    case Reduction::Mean: {
      for (std::size_t i = 0; i < ta.numel(); ++i) acc += ta.at(i);
      if (r == Reduction::Mean) acc /= static_cast<double>(ta.numel());
      break;
    }
    case Reduction::Max:
    case Reduction::Min: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < ta.numel(); ++i) {
        bool better = r == Reduction::Max ? ta.at(i) > ta.at(best) : ta.at(i) < ta.at(best);
        if (better) best = i;  // ties keep the first flat index
      }
      n.flat_index = best;
      acc = ta.at(best);
      break;
    }
    case Reduction::Variance: {
      double mu = 0.0;
      for (std::size_t i = 0; i < ta.numel(); ++i) mu += ta.at(i);
      mu /= static_cast<double>(ta.numel());
      for (std::size_t i = 0; i < ta.numel(); ++i) {
        double d = ta.at(i) - mu;
        acc += d * d;
      }
      acc /= static_cast<double>(ta.numel());  // population variance
      break;
    }
  }
  n.value = Tensor::scalar(static_cast<float>(acc));
  return push(std::move(n));
}

ValueId Tape::softmax(ValueId a) {
  const Tensor& ta = node(a).value;
  if (ta.shape().size() != 1) {
    throw std::invalid_argument("softmax: expects 1-D input, got " + ta.shape_str());
  }
  float mx = ta.at(0);
  for (std::size_t i = 1; i < ta.numel(); ++i) mx = std::max(mx, ta.at(i));
  std::vector<float> out(ta.numel());
  double z = 0.0;
  for (std::size_t i = 0; i < ta.numel(); ++i) {
    out[i] = std::exp(ta.at(i) - mx);
    z += out[i];
  }
  for (float& v : out) v = static_cast<float>(v / z);
  Node n;
  n.op = Op::Softmax;
  n.inputs = {a};
  n.value = Tensor(ta.shape(), std::move(out));
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

ValueId Tape::index(ValueId a, std::size_t i) {
  const Tensor& ta = node(a).value;
  if (ta.shape().size() != 1) {
    throw std::invalid_argument("index: expects 1-D input, got " + ta.shape_str());
  }
  Node n;
  n.op = Op::Index;
  n.inputs = {a};
  n.flat_index = i;
  n.value = Tensor::scalar(ta.at(i));
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

ValueId Tape::softmax_cross_entropy(ValueId logits, std::vector<int> labels) {
  const Tensor& tl = node(logits).value;
  if (tl.shape().size() != 2) {
    throw std::invalid_argument("softmax_cross_entropy: logits must be 2-D, got " +
                                tl.shape_str());
  }
  std::size_t rows = tl.shape()[0], cols = tl.shape()[1];
  if (labels.size() != rows) {
    throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(rows) + " rows");
  }
  for (int lb : labels) {
    if (lb < 0 || static_cast<std::size_t>(lb) >= cols) {
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(lb) +
                                  " out of range [0," + std::to_string(cols) + ")");
    }
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    float mx = tl.at(i * cols);
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, tl.at(i * cols + j));
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += std::exp(static_cast<double>(tl.at(i * cols + j)) - mx);
    double logit = tl.at(i * cols + static_cast<std::size_t>(labels[i]));
    loss += -(logit - mx - std::log(z));
  }
  loss /= static_cast<double>(rows);
  Node n;
  n.op = Op::SoftmaxCE;
  n.inputs = {logits};
  n.labels = std::move(labels);
  n.value = Tensor::scalar(static_cast<float>(loss));
  n.requires_grad = node(logits).requires_grad;
  return push(std::move(n));
}

ValueId Tape::custom_grad(ValueId a, const std::function<Tensor(const Tensor&)>& forward,
                          float backward_multiplier) {
  const Tensor& ta = node(a).value;
  Tensor out = forward(ta);
  if (!out.same_shape(ta)) {
    throw std::invalid_argument("custom_grad: forward must preserve shape, " +
                                ta.shape_str() + " -> " + out.shape_str());
  }
  Node n;
  n.op = Op::Custom;
  n.inputs = {a};
  n.scalar = backward_multiplier;
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

ValueId Tape::custom_binary(ValueId a, ValueId b, Tensor value, float mult_a,
                            std::vector<double> dvalue_db) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (!value.same_shape(ta) || dvalue_db.size() != ta.numel()) {
    throw std::invalid_argument("custom_binary: value/derivative shape must match input " +
                                ta.shape_str());
  }
  if (tb.numel() != 1) {
    throw std::invalid_argument("custom_binary: second input must be scalar, got " +
                                tb.shape_str());
  }
  Node n;
  n.op = Op::CustomBinary;
  n.inputs = {a, b};
  n.scalar = mult_a;
  n.value = std::move(value);
  n.saved = std::move(dvalue_db);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

const Tensor& Tape::value(ValueId id) const { return node(id).value; }
const Tensor& Tape::grad(ValueId id) const { return node(id).grad; }
bool Tape::requires_grad(ValueId id) const { return node(id).requires_grad; }

void Tape::backward(ValueId root) { backward(root, Tensor::full(node(root).value.shape(), 1.0f)); }

void Tape::backward(ValueId root, const Tensor& seed) {
  check(root);
  if (!seed.same_shape(node(root).value)) {
    throw std::invalid_argument("backward: seed shape " + seed.shape_str() +
                                " does not match root " + node(root).value.shape_str());
  }
  // per-pass adjoints; added into persistent grads at the end so repeated
  // backward() calls accumulate
  std::vector<Tensor> adj(nodes_.size());
  std::vector<bool> live(nodes_.size(), false);
  adj[root] = seed;
  live[root] = true;

  auto bump = [&](ValueId id, std::size_t i, float v) {
    if (!live[id]) {
      adj[id] = Tensor::zeros(nodes_[id].value.shape());
      live[id] = true;
    }
    adj[id].mutable_data()[i] += v;
  };

  for (std::size_t idx = nodes_.size(); idx-- > 0;) {
    if (!live[idx] || !nodes_[idx].requires_grad) continue;
    const Node& n = nodes_[idx];
    const Tensor& up = adj[idx];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add: {
        const Tensor& tb = nodes_[n.inputs[1]].value;
        for (std::size_t i = 0; i < up.numel(); ++i) {
          bump(n.inputs[0], i, up.at(i));
          bump(n.inputs[1], tb.numel() == 1 ? 0 : i, up.at(i));
        }
        break;
      }
      case Op::Sub: {
        const Tensor& tb = nodes_[n.inputs[1]].value;
        for (std::size_t i = 0; i < up.numel(); ++i) {
          bump(n.inputs[0], i, up.at(i));
          bump(n.inputs[1], tb.numel() == 1 ? 0 : i, -up.at(i));
        }
        break;
      }
      case Op::Mul: {
        const Tensor& ta = nodes_[n.inputs[0]].value;
        const Tensor& tb = nodes_[n.inputs[1]].value;
        for (std::size_t i = 0; i < up.numel(); ++i) {
          float bv = second_operand(tb, i);
          bump(n.inputs[0], i, up.at(i) * bv);
          bump(n.inputs[1], tb.numel() == 1 ? 0 : i, up.at(i) * ta.at(i));
        }
        break;
      }
      case Op::Div: {
        const Tensor& ta = nodes_[n.inputs[0]].value;
        const Tensor& tb = nodes_[n.inputs[1]].value;
        for (std::size_t i = 0; i < up.numel(); ++i) {
          float bv = second_operand(tb, i);
          bump(n.inputs[0], i, up.at(i) / bv);
          bump(n.inputs[1], tb.numel() == 1 ? 0 : i, -up.at(i) * ta.at(i) / (bv * bv));
        }
        break;
      }
      case Op::Neg:
        for (std::size_t i = 0; i < up.numel(); ++i) bump(n.inputs[0], i, -up.at(i));
        break;
      case Op::Relu: {
        const Tensor& ta = nodes_[n.inputs[0]].value;
        for (std::size_t i = 0; i < up.numel(); ++i)
          bump(n.inputs[0], i, ta.at(i) > 0.0f ? up.at(i) : 0.0f);
        break;
      }
      case Op::Sqrt: {
        for (std::size_t i = 0; i < up.numel(); ++i)
          bump(n.inputs[0], i, up.at(i) * 0.5f / n.value.at(i));
        break;
      }
      case Op::Scale:
        for (std::size_t i = 0; i < up.numel(); ++i) bump(n.inputs[0], i, n.scalar * up.at(i));
        break;
      case Op::Matmul: {
        const Tensor& ta = nodes_[n.inputs[0]].value;
        const Tensor& tb = nodes_[n.inputs[1]].value;
        std::size_t m = ta.shape()[0], k = ta.shape()[1], nn = tb.shape()[1];
        // dA = dC * B^T ; dB = A^T * dC
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            float acc = 0.0f;
            for (std::size_t j = 0; j < nn; ++j)
              acc += up.at(i * nn + j) * tb.at(p * nn + j);
            bump(n.inputs[0], i * k + p, acc);
          }
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < nn; ++j) {
            float acc = 0.0f;
            for (std::size_t i = 0; i < m; ++i)
              acc += ta.at(i * k + p) * up.at(i * nn + j);
            bump(n.inputs[1], p * nn + j, acc);
          }
        break;
      }
      case Op::AddBias: {
        std::size_t rows = n.value.shape()[0], cols = n.value.shape()[1];
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j) {
            bump(n.inputs[0], i * cols + j, up.at(i * cols + j));
            bump(n.inputs[1], j, up.at(i * cols + j));
          }
        break;
      }
      case Op::Reduce: {
        const Tensor& ta = nodes_[n.inputs[0]].value;
        float u = up.at(0);
        switch (n.reduction) {
          case Reduction::Sum:
            for (std::size_t i = 0; i < ta.numel(); ++i) bump(n.inputs[0], i, u);
            break;
          case Reduction::Mean: {
            float inv = 1.0f / static_cast<float>(ta.numel());
            for (std::size_t i = 0; i < ta.numel(); ++i) bump(n.inputs[0], i, u * inv);
            break;
          }
          case Reduction::Max:
          case Reduction::Min:
            bump(n.inputs[0], n.flat_index, u);
            break;
          case Reduction::Variance: {
            double mu = 0.0;
            for (std::size_t i = 0; i < ta.numel(); ++i) mu += ta.at(i);
            mu /= static_cast<double>(ta.numel());
            float inv = 2.0f / static_cast<float>(ta.numel());
            for (std::size_t i = 0; i < ta.numel(); ++i)
              bump(n.inputs[0], i, u * inv * static_cast<float>(ta.at(i) - mu));
            break;
          }
        }
        break;
      }
      case Op::Softmax: {
        // dx_i = p_i * (u_i - sum_j u_j p_j)
        double dot = 0.0;
        for (std::size_t i = 0; i < up.numel(); ++i) dot += up.at(i) * n.value.at(i);
        for (std::size_t i = 0; i < up.numel(); ++i)
          bump(n.inputs[0], i, n.value.at(i) * (up.at(i) - static_cast<float>(dot)));
        break;
      }
      case Op::Index:
        bump(n.inputs[0], n.flat_index, up.at(0));
        break;
      case Op::SoftmaxCE: {
        const Tensor& tl = nodes_[n.inputs[0]].value;
        std::size_t rows = tl.shape()[0], cols = tl.shape()[1];
        float u = up.at(0);
        for (std::size_t i = 0; i < rows; ++i) {
          float mx = tl.at(i * cols);
          for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, tl.at(i * cols + j));
          double z = 0.0;
          for (std::size_t j = 0; j < cols; ++j)
            z += std::exp(static_cast<double>(tl.at(i * cols + j)) - mx);
          for (std::size_t j = 0; j < cols; ++j) {
            double p = std::exp(static_cast<double>(tl.at(i * cols + j)) - mx) / z;
            double onehot = (static_cast<std::size_t>(n.labels[i]) == j) ? 1.0 : 0.0;
            bump(n.inputs[0], i * cols + j,
                 u * static_cast<float>((p - onehot) / static_cast<double>(rows)));
          }
        }
        break;
      }
      case Op::Custom:
        for (std::size_t i = 0; i < up.numel(); ++i)
          bump(n.inputs[0], i, n.scalar * up.at(i));
        break;
      case Op::CustomBinary: {
        double acc = 0.0;
        for (std::size_t i = 0; i < up.numel(); ++i) {
          bump(n.inputs[0], i, n.scalar * up.at(i));
          acc += static_cast<double>(up.at(i)) * n.saved[i];
        }
        bump(n.inputs[1], 0, static_cast<float>(acc));
        break;
      }
    }
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!live[i]) continue;
    auto& g = nodes_[i].grad.mutable_data();
    const auto a = adj[i].data();
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += a[j];
  }
}

void Tape::reset_grads() {
  for (Node& n : nodes_) n.grad = Tensor::zeros(n.value.shape());
}

}  // namespace autoqnn
