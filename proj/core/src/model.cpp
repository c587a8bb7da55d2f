// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "autoqnn/rng.hpp"

namespace autoqnn::pipeline {

namespace {

std::pair<std::size_t, std::size_t> parse_dims(const std::string& s) {
  auto x = s.find('x');
  if (x == std::string::npos) {
    throw std::invalid_argument("param shape '" + s + "' must be RxC");
  }
  return {std::stoul(s.substr(0, x)), std::stoul(s.substr(x + 1))};
}

}  // namespace

Model::Model(graph::Graph g, std::uint64_t init_seed) : graph_(std::move(g)) {
  graph::Diagnostics diag = graph::validate(graph_);
  if (!diag.ok()) {
    throw std::invalid_argument("model: invalid graph: " + diag.problems.front());
  }
  order_ = graph::topo_order(graph_);

  Rng rng = Rng::for_phase(init_seed, "init");
  // map iteration is id-sorted, so initialization order is reproducible
  for (const auto& [id, v] : graph_.vertices()) {
    if (v.type == graph::OpType::Data && v.attrs.count("param")) {
      auto [rows, cols] = parse_dims(v.attrs.at("param"));
      float stddev = std::sqrt(2.0f / static_cast<float>(rows));
      std::vector<float> w(rows * cols);
      for (auto& x : w) x = stddev * static_cast<float>(rng.normal());
      params_.emplace(id, Parameter(Tensor({rows, cols}, std::move(w))));
    }
    if (v.type == graph::OpType::MatMulFC && v.attrs.count("bias")) {
      // bias lives as an attribute so QAG never quantizes it
      std::size_t width = std::stoul(v.attrs.at("bias"));
      params_.emplace(id + ".bias", Parameter(Tensor::zeros({width})));
    }
  }
}

std::vector<QuantizerInfo> Model::quantizers() const {
  std::vector<QuantizerInfo> out;
  for (const auto& [id, v] : graph_.vertices()) {
    if (v.type != graph::OpType::Quantize) continue;
    auto in = graph_.in_edges(id);
    auto outgoing = graph_.out_edges(id);
    if (in.size() != 1 || outgoing.size() != 1) {
      throw std::invalid_argument("model: quantizer '" + id +
                                  "' must have exactly one input and one output edge");
    }
    QuantizerInfo q;
    q.id = id;
    q.src = in.front().src;
    q.dst = outgoing.front().dst;
    const graph::Vertex& src = graph_.vertex(q.src);
    q.is_weight = src.type == graph::OpType::Data && src.attrs.count("param") > 0;
    out.push_back(std::move(q));
  }
  return out;
}

Model::Forward Model::forward(Tape& tape, const Tensor& batch_features,
                              const std::vector<int>& batch_labels,
                              const std::map<std::string, QuantizerBinding>& bindings) const {
  Forward fw;
  std::map<std::string, ValueId> values;

  for (const std::string& id : order_) {
    const graph::Vertex& v = graph_.vertex(id);
    auto ins = graph_.in_edges(id);
    std::stable_sort(ins.begin(), ins.end(),
                     [](const graph::Edge& a, const graph::Edge& b) { return a.slot < b.slot; });
    auto input_value = [&](std::size_t i) { return values.at(ins.at(i).src); };

    switch (v.type) {
      case graph::OpType::Data: {
        if (v.attrs.count("param")) {
          const Parameter& p = params_.at(id);
          ValueId leaf = tape.leaf(p.value, p.trainable);
          values[id] = leaf;
          fw.param_leaves[id] = leaf;
        } else {
          values[id] = tape.leaf(batch_features);
        }
        break;
      }
      case graph::OpType::MatMulFC: {
        if (ins.size() != 2) {
          throw std::invalid_argument("model: fc vertex '" + id + "' needs 2 inputs, has " +
                                      std::to_string(ins.size()));
        }
        ValueId out = tape.matmul(input_value(0), input_value(1));
        if (v.attrs.count("bias")) {
          const Parameter& p = params_.at(id + ".bias");
          ValueId bias = tape.leaf(p.value, p.trainable);
          fw.param_leaves[id + ".bias"] = bias;
          out = tape.add_bias(out, bias);
        }
        values[id] = out;
        break;
      }
      case graph::OpType::Conv:
        throw std::runtime_error("model: conv execution is not implemented");
      case graph::OpType::ReLU:
        values[id] = tape.relu(input_value(0));
        break;
      case graph::OpType::Add:
        values[id] = tape.add(input_value(0), input_value(1));
        break;
      case graph::OpType::BatchNormLike: {
        ValueId x = input_value(0);
        ValueId centered = tape.sub(x, tape.mean(x));
        ValueId denom = tape.sqrt(tape.add(tape.variance(x), tape.leaf(Tensor::scalar(1e-5f))));
        values[id] = tape.div(centered, denom);
        break;
      }
      case graph::OpType::SoftmaxCE: {
        fw.logits = input_value(0);
        fw.loss = tape.softmax_cross_entropy(fw.logits, batch_labels);
        values[id] = fw.loss;
        break;
      }
      case graph::OpType::Quantize: {
        auto it = bindings.find(id);
        if (it == bindings.end()) {
          throw std::invalid_argument("model: no binding for quantizer '" + id + "'");
        }
        ValueId in = input_value(0);
        fw.quantizer_inputs[id] = in;
        const QuantizerBinding& b = it->second;
        ValueId out;
        switch (b.mode) {
          case QuantizerBinding::Mode::Soft:
            out = qss::soft_quantize(tape, in, b.theta, *b.noise, b.tau, *b.candidates);
            break;
          case QuantizerBinding::Mode::Fixed:
            out = quant::quantize_on_tape(tape, in, b.config);
            break;
          case QuantizerBinding::Mode::Learnable:
            out = qpl::quantize_learnable(tape, in, b.bit_leaf, b.scheme, b.lambda);
            break;
          default:
            throw std::logic_error("model: unknown quantizer mode");
        }
        fw.quantizer_outputs[id] = out;
        values[id] = out;
        break;
      }
    }
  }
  if (fw.loss == 0 && fw.logits == 0) {
    throw std::invalid_argument("model: graph has no softmax_ce vertex");
  }
  return fw;
}

double Model::evaluate(const Tensor& features, const std::vector<int>& labels,
                       const BindingFactory& make_bindings) const {
  Tape tape;
  auto bindings = make_bindings(tape);
  Forward fw = forward(tape, features, labels, bindings);
  const Tensor& logits = tape.value(fw.logits);
  std::size_t rows = logits.shape()[0], cols = logits.shape()[1];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < cols; ++j) {
      if (logits.at(i * cols + j) > logits.at(i * cols + best)) best = j;
    }
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows);
}

void Model::sgd_step(Tape& tape, const Forward& fw, float lr) {
  for (auto& [name, leaf] : fw.param_leaves) {
    Parameter& p = params_.at(name);
    if (!p.trainable) continue;
    const Tensor& g = tape.grad(leaf);
    auto& w = p.value.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g.at(i);
  }
}

}  // namespace autoqnn::pipeline
