// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "autoqnn/graph.hpp"
#include "autoqnn/qpl.hpp"
#include "autoqnn/qss.hpp"
#include "autoqnn/schemes.hpp"
#include "autoqnn/tape.hpp"

namespace autoqnn::pipeline {

/// How one Quantize vertex executes during a forward pass.
struct QuantizerBinding {
  enum class Mode { Soft, Fixed, Learnable };
  Mode mode = Mode::Fixed;

  // Soft: Gumbel-weighted mixture over the candidate set
  ValueId theta = 0;
  const qss::GumbelNoise* noise = nullptr;
  float tau = 1.0f;
  const std::vector<quant::QuantConfig>* candidates = nullptr;

  // Fixed: one bound scheme
  quant::QuantConfig config;

  // Learnable: scheme with a trainable bit leaf
  ValueId bit_leaf = 0;
  quant::SchemeId scheme = quant::SchemeId::ZoomQ;
  float lambda = 1.0f;
};

struct QuantizerInfo {
  std::string id;
  std::string src;
  std::string dst;
  bool is_weight = false;
};

/// Executable model: a computing graph plus its trainable parameters.
/// Each forward pass builds nodes on a caller-provided tape, so the same
/// model can run full precision, soft-search, fixed or learnable-bit passes.
class Model {
 public:
  Model(graph::Graph g, std::uint64_t init_seed);

  const graph::Graph& graph() const { return graph_; }
  std::map<std::string, Parameter>& params() { return params_; }
  const std::map<std::string, Parameter>& params() const { return params_; }

  /// Quantize vertices sorted by id, classified weight vs activation.
  std::vector<QuantizerInfo> quantizers() const;

  struct Forward {
    ValueId loss = 0;
    ValueId logits = 0;
    std::map<std::string, ValueId> param_leaves;
    std::map<std::string, ValueId> quantizer_inputs;
    std::map<std::string, ValueId> quantizer_outputs;
  };

  /// Execute in topological order. `bindings` must cover every Quantize
  /// vertex. Labels feed the softmax-cross-entropy vertex.
  Forward forward(Tape& tape, const Tensor& batch_features,
                  const std::vector<int>& batch_labels,
                  const std::map<std::string, QuantizerBinding>& bindings) const;

  using BindingFactory = std::function<std::map<std::string, QuantizerBinding>(Tape&)>;

  /// Top-1 accuracy over a dataset, in one whole-set forward pass. The
  /// factory builds bindings on the evaluation tape (bit leaves and theta
  /// leaves are tape-local).
  double evaluate(const Tensor& features, const std::vector<int>& labels,
                  const BindingFactory& make_bindings) const;

  void sgd_step(Tape& tape, const Forward& fw, float lr);

 private:
  graph::Graph graph_;
  std::map<std::string, Parameter> params_;
  std::vector<std::string> order_;
};

}  // namespace autoqnn::pipeline
