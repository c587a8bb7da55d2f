// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "autoqnn/tape.hpp"
#include "autoqnn/tensor.hpp"

namespace autoqnn::quant {

enum class SchemeId { Binary, Ternary, Quaternary, FixedQ, ResQ, ZoomQ, ClipQ, PotQ };

struct BitRange {
  int lo;
  int hi;
};

BitRange scheme_bit_range(SchemeId s);
bool scheme_has_free_bits(SchemeId s);     // false for Binary/Ternary/Quaternary
bool scheme_takes_alpha(SchemeId s);       // ClipQ, PotQ
std::string scheme_name(SchemeId s);
SchemeId scheme_from_name(const std::string& name);

/// One configured quantizer instance.
struct QuantConfig {
  SchemeId scheme = SchemeId::ZoomQ;
  float b = 3.0f;          // positive integer for fixed use, real under QPL
  float lambda = 1.0f;     // scale ratio in alpha = lambda * beta
  float alpha = 0.0f;      // derived or table-provided scale
  float beta = 0.0f;       // derived average step size
};

/// Kernel output: quantized values plus the scales that produced them,
/// so the same projection can be replayed with pinned scales.
struct QuantResult {
  Tensor values;
  float alpha = 0.0f;
  float beta = 0.0f;
};

// half-away-from-zero; the rounding mode used throughout
float round_half_away(float x);
// maps positives to 1, non-positives (including 0) to -1
float sign_nonpos(float x);

// the eight candidate kernels
QuantResult quantize_binary(const Tensor& d);
QuantResult quantize_ternary(const Tensor& d);
QuantResult quantize_quaternary(const Tensor& d);
QuantResult quantize_fixed(const Tensor& d, int b);
QuantResult quantize_res(const Tensor& d, int b);
QuantResult quantize_zoom(const Tensor& d, int b);
QuantResult quantize_clip(const Tensor& d, int b, float alpha);
QuantResult quantize_pot(const Tensor& d, int b, float alpha);

// projections with pinned scales (re-quantizing with the SAME config)
Tensor apply_binary(const Tensor& d, float alpha);
Tensor apply_ternary(const Tensor& d, float alpha, float beta);
Tensor apply_quaternary(const Tensor& d, float alpha);
Tensor apply_fixed(const Tensor& d, int b, float alpha);
Tensor apply_zoom(const Tensor& d, int b, float alpha, float beta);

/// Run one configured scheme. ClipQ/PotQ require cfg.alpha set.
QuantResult quantize(const Tensor& d, const QuantConfig& cfg);

/// Tape node for a configured scheme: forward quantizes, backward is the
/// straight-through estimator (gradient = lambda * upstream, exactly).
ValueId quantize_on_tape(Tape& tape, ValueId d, const QuantConfig& cfg);

/// Mean squared error between a tensor and its quantized image.
double quantization_loss(const Tensor& d, const Tensor& q);

}  // namespace autoqnn::quant
