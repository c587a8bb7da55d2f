// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "autoqnn/schemes.hpp"
#include "autoqnn/tape.hpp"

namespace autoqnn::qpl {

/// Continuous trainable bitwidth of one quantizing vertex.
struct LearnableBitwidth {
  std::string quantizer_id;
  float b = 3.0f;
  float b_lo = 1.0f;
  float b_hi = 8.0f;
  std::size_t elem_count = 0;

  void clamp() { b = std::min(std::max(b, b_lo), b_hi); }
};

struct PrecisionTarget {
  float target_bits = 3.0f;  // expected average bitwidth, preset
  float weight = 1.0f;       // coefficient on the precision loss
};

/// Only schemes expressible as alpha * H(d / beta) with the range-derived
/// step beta = (max - min) / 2^b learn their bitwidth.
bool scheme_supports_qpl(quant::SchemeId s);

/// Default clamp range for a scheme ([2,4] for PotQ, [1,8] otherwise).
std::pair<float, float> bit_clamp_range(quant::SchemeId s);

/// The general quantizing process evaluated with a continuous bitwidth.
/// beta = (max(d)-min(d)) / 2^b as a real; the projection H uses the integer
/// grid of round(b). dvalues_db carries the straight-through derivative
/// -beta*ln2*(H(d/(lambda*alpha)) - d/(lambda*alpha)) per element.
struct GeneralQuantize {
  Tensor values;
  std::vector<double> dvalues_db;
  float alpha = 0.0f;
  float beta = 0.0f;
};
GeneralQuantize general_quantize(const Tensor& d, quant::SchemeId scheme, float b,
                                 float lambda);

/// Tape node for the general process: STE to d (gradient * lambda), closed
/// form to the scalar bit leaf.
ValueId quantize_learnable(Tape& tape, ValueId d, ValueId bit_leaf,
                           quant::SchemeId scheme, float lambda);

/// Independent evaluation of the bit-gradient chain: reads dL/d(output) from
/// the tape and recomputes the closed form from the raw input values.
double bit_gradient(const Tape& tape, ValueId output, ValueId d,
                    quant::SchemeId scheme, float b, float lambda);

struct BitEntry {
  ValueId bit_leaf;
  std::size_t elem_count;
};

/// (E(B) - target)^2 on the tape, with E(B) the element-count-weighted mean
/// of the per-quantizer bit leaves. Constant-bit quantizers enter through
/// `fixed_bits` as (bits, count) pairs without gradients.
ValueId precision_loss(Tape& tape, const std::vector<BitEntry>& learnable,
                       const std::vector<std::pair<float, std::size_t>>& fixed_bits,
                       const PrecisionTarget& target);

double weighted_mean_bits(const std::vector<std::pair<float, std::size_t>>& bits);
double precision_loss_value(const std::vector<std::pair<float, std::size_t>>& bits,
                            const PrecisionTarget& target);
std::vector<double> precision_loss_gradients(
    const std::vector<std::pair<float, std::size_t>>& bits, const PrecisionTarget& target);

/// One SGD step on the bit parameters: b <- clamp(b - lr * g_b).
void combined_bit_step(std::vector<LearnableBitwidth>& bits,
                       const std::vector<double>& gradients, float lr);

struct FinalBit {
  std::string quantizer_id;
  quant::SchemeId scheme;
  int bits;
  std::size_t elem_count;
  bool is_weight;
};

struct BitPolicy {
  std::vector<FinalBit> per_quantizer;
  double avg_weight_bits = 0.0;
  double avg_act_bits = 0.0;
  double avg_all_bits = 0.0;
};

struct ContinuousBit {
  std::string quantizer_id;
  quant::SchemeId scheme;
  float b;
  std::size_t elem_count;
  bool is_weight;
};

/// Round half away from zero, clamp to the scheme's range, and report
/// element-count-weighted averages for weights and activation separately.
BitPolicy finalize_bits(const std::vector<ContinuousBit>& bits);

}  // namespace autoqnn::qpl
