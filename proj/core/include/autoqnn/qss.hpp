// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoqnn/alpha.hpp"
#include "autoqnn/rng.hpp"
#include "autoqnn/schemes.hpp"
#include "autoqnn/tape.hpp"

namespace autoqnn::qss {

enum class SearchMode { FineGrained, CoarseGrained };

SearchMode search_mode_from_name(const std::string& name);
std::string search_mode_name(SearchMode m);

/// State parameters for one search group: an ordered candidate list and the
/// trainable logits theta (one per candidate). Fine-grained search owns one
/// state per quantizer; coarse-grained shares one state across quantizers,
/// separately for weights and for activation.
struct SchemeSearchState {
  std::vector<quant::QuantConfig> candidates;
  Parameter theta;
  SearchMode mode = SearchMode::CoarseGrained;

  explicit SchemeSearchState(std::vector<quant::QuantConfig> cands,
                             SearchMode m = SearchMode::CoarseGrained);
  std::size_t size() const { return candidates.size(); }
};

struct TemperatureSchedule {
  float tau0 = 5.0f;
  int total_epochs = 10;  // Delta
  float exponent = 2.0f;  // p
};

/// tau = tau0 * (1 - delta/Delta)^p, floored at 1e-3 when delta == Delta so
/// the softmax stays defined. delta > Delta is an error.
float temperature(const TemperatureSchedule& s, int epoch);

constexpr float kTemperatureFloor = 1e-3f;

struct GumbelNoise {
  std::vector<float> g;
  static GumbelNoise draw(std::size_t n, Rng& rng);
};

/// Soft sampling: output = sum_k p_k * Q_k(d) with p = softmax((theta+g)/tau),
/// differentiable in theta through p and in d through the candidates' STE.
ValueId soft_quantize(Tape& tape, ValueId d, ValueId theta, const GumbelNoise& noise,
                      float tau, const std::vector<quant::QuantConfig>& candidates);

/// argmax(theta + g) when noise is given (stochastic), argmax(theta) when
/// null (final greedy selection). Ties go to the lowest index.
std::size_t hard_select(const std::vector<float>& theta, const GumbelNoise* noise);

/// Gradient accumulated in theta's tape leaf after backward().
Tensor theta_gradient(const Tape& tape, ValueId theta);

/// Candidate probabilities softmax(theta) for trace logging.
std::vector<float> selection_probabilities(const std::vector<float>& theta);

/// Default candidate sets: weights use all eight schemes; activation skips
/// the sign-heavy Binary/Ternary/Quaternary. Multi-bit candidates share one
/// search bitwidth, ClipQ/PotQ scales come from the alpha table.
std::vector<quant::QuantConfig> default_weight_candidates(int bits,
                                                          const quant::AlphaTable& alphas);
std::vector<quant::QuantConfig> default_activation_candidates(
    int bits, const quant::AlphaTable& alphas);

std::vector<quant::QuantConfig> candidates_from_names(const std::vector<std::string>& names,
                                                      int bits,
                                                      const quant::AlphaTable& alphas);

}  // namespace autoqnn::qss
