// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/qpl.hpp"

#include <cmath>
#include <stdexcept>

namespace autoqnn::qpl {

using quant::SchemeId;

bool scheme_supports_qpl(SchemeId s) {
  switch (s) {
    case SchemeId::FixedQ:
    case SchemeId::ZoomQ:
    case SchemeId::ClipQ:
    case SchemeId::PotQ:
      return true;
    default:
      return false;
  }
}

std::pair<float, float> bit_clamp_range(SchemeId s) {
  if (s == SchemeId::PotQ) return {2.0f, 4.0f};
  return {1.0f, 8.0f};
}

namespace {

double clipd(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }
double round_half_away_d(double x) {
  return x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5);
}

// the scheme's projection H at a scaled coordinate; offset carries
// min(d)/beta, anchoring the zoom grid at the range bottom
double project(SchemeId scheme, double s, int b_int, double offset) {
  switch (scheme) {
    case SchemeId::ZoomQ: {
      double hi = std::exp2(b_int) - 1.0;
      return clipd(std::floor(s - offset), 0.0, hi) + offset + 0.5;
    }
    case SchemeId::ClipQ: {
      double lo = -std::exp2(b_int - 1);
      double hi = std::exp2(b_int - 1) - 1.0;
      return clipd(std::floor(s), lo, hi) + 0.5;
    }
    case SchemeId::FixedQ: {
      double lo = -std::exp2(b_int - 1);
      double hi = std::exp2(b_int - 1) - 1.0;
      return clipd(round_half_away_d(s), lo, hi);
    }
    case SchemeId::PotQ: {
      if (s == 0.0) return 0.0;
      double hi = std::exp2(b_int - 1) - 1.0;
      double v = clipd(round_half_away_d(std::log2(std::fabs(s))), 0.0, hi);
      double e = v - (v == 0.0 ? 1.0 : 0.0);
      return (s > 0.0 ? 1.0 : -1.0) * std::exp2(e);
    }
    default:
      throw std::invalid_argument("general quantize: scheme " +
                                  quant::scheme_name(scheme) +
                                  " does not support learnable bits");
  }
}

int clamped_grid_bits(SchemeId scheme, float b) {
  int b_int = static_cast<int>(quant::round_half_away(b));
  auto [lo, hi] = bit_clamp_range(scheme);
  return std::max(static_cast<int>(lo), std::min(static_cast<int>(hi), b_int));
}

}  // namespace

GeneralQuantize general_quantize(const Tensor& d, SchemeId scheme, float b,
                                 float lambda) {
  if (!scheme_supports_qpl(scheme)) {
    throw std::invalid_argument("general quantize: unsupported scheme " +
                                quant::scheme_name(scheme));
  }
  if (d.numel() == 0) throw std::invalid_argument("general quantize: empty tensor");

  float mx = d.at(0), mn = d.at(0);
  for (float v : d.data()) {
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  GeneralQuantize out;
  if (mx == mn) {
    // zero range: pass through, bit gradient defined as 0
    out.values = d;
    out.dvalues_db.assign(d.numel(), 0.0);
    out.alpha = out.beta = 0.0f;
    return out;
  }

  double beta = (static_cast<double>(mx) - mn) / std::exp2(static_cast<double>(b));
  double alpha = lambda * beta;  // 2^b enters as a real number
  int b_int = clamped_grid_bits(scheme, b);
  const double ln2 = std::log(2.0);

  std::vector<float> q(d.numel());
  std::vector<double> dqdb(d.numel());
  double fwd_offset = mn / beta;
  double ste_offset = mn / (lambda * alpha);
  for (std::size_t i = 0; i < d.numel(); ++i) {
    double s = d.at(i) / beta;
    q[i] = static_cast<float>(alpha * project(scheme, s, b_int, fwd_offset));
    // straight-through chain: dq/db = -beta*ln2*(H(d/(lambda*alpha)) - d/(lambda*alpha))
    double sp = d.at(i) / (lambda * alpha);
    double h = project(scheme, sp, b_int, ste_offset);
    dqdb[i] = -beta * ln2 * (h - sp);
  }
  out.values = Tensor(d.shape(), std::move(q));
  out.dvalues_db = std::move(dqdb);
  out.alpha = static_cast<float>(alpha);
  out.beta = static_cast<float>(beta);
  return out;
}

ValueId quantize_learnable(Tape& tape, ValueId d, ValueId bit_leaf, SchemeId scheme,
                           float lambda) {
  const Tensor& dv = tape.value(d);
  float b = tape.value(bit_leaf).item();
  GeneralQuantize g = general_quantize(dv, scheme, b, lambda);
  return tape.custom_binary(d, bit_leaf, std::move(g.values), lambda,
                            std::move(g.dvalues_db));
}

double bit_gradient(const Tape& tape, ValueId output, ValueId d, SchemeId scheme,
                    float b, float lambda) {
  const Tensor& up = tape.grad(output);
  const Tensor& dv = tape.value(d);

  float mx = dv.at(0), mn = dv.at(0);
  for (float v : dv.data()) {
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  if (mx == mn) return 0.0;

  double beta = (static_cast<double>(mx) - mn) / std::exp2(static_cast<double>(b));
  double alpha = lambda * beta;
  int b_int = clamped_grid_bits(scheme, b);
  const double ln2 = std::log(2.0);

  double acc = 0.0;
  double offset = mn / (lambda * alpha);
  for (std::size_t i = 0; i < dv.numel(); ++i) {
    double sp = dv.at(i) / (lambda * alpha);
    double h = project(scheme, sp, b_int, offset);
    acc += static_cast<double>(up.at(i)) * beta * ln2 * (h - sp);
  }
  return -acc;
}

ValueId precision_loss(Tape& tape, const std::vector<BitEntry>& learnable,
                       const std::vector<std::pair<float, std::size_t>>& fixed_bits,
                       const PrecisionTarget& target) {
  if (learnable.empty() && fixed_bits.empty()) {
    throw std::invalid_argument("precision_loss: no quantizers");
  }
  double total = 0.0;
  for (const BitEntry& e : learnable) total += static_cast<double>(e.elem_count);
  double fixed_sum = 0.0;
  for (const auto& [b, count] : fixed_bits) {
    total += static_cast<double>(count);
    fixed_sum += static_cast<double>(b) * static_cast<double>(count);
  }
  if (total == 0.0) throw std::invalid_argument("precision_loss: zero elements");

  // E(B) = sum_l w_l * b_l with w_l = |d_q(l)| / total
  ValueId mean_bits = tape.leaf(Tensor::scalar(static_cast<float>(fixed_sum / total)));
  for (const BitEntry& e : learnable) {
    float w = static_cast<float>(static_cast<double>(e.elem_count) / total);
    mean_bits = tape.add(mean_bits, tape.scale(e.bit_leaf, w));
  }
  ValueId gap = tape.sub(mean_bits, tape.leaf(Tensor::scalar(target.target_bits)));
  ValueId sq = tape.mul(gap, gap);
  return target.weight == 1.0f ? sq : tape.scale(sq, target.weight);
}

double weighted_mean_bits(const std::vector<std::pair<float, std::size_t>>& bits) {
  if (bits.empty()) throw std::invalid_argument("weighted_mean_bits: empty list");
  double num = 0.0, den = 0.0;
  for (const auto& [b, count] : bits) {
    num += static_cast<double>(b) * static_cast<double>(count);
    den += static_cast<double>(count);
  }
  if (den == 0.0) throw std::invalid_argument("weighted_mean_bits: zero elements");
  return num / den;
}

double precision_loss_value(const std::vector<std::pair<float, std::size_t>>& bits,
                            const PrecisionTarget& target) {
  double gap = weighted_mean_bits(bits) - target.target_bits;
  return target.weight * gap * gap;
}

std::vector<double> precision_loss_gradients(
    const std::vector<std::pair<float, std::size_t>>& bits, const PrecisionTarget& target) {
  double den = 0.0;
  for (const auto& [b, count] : bits) den += static_cast<double>(count);
  double gap = weighted_mean_bits(bits) - target.target_bits;
  std::vector<double> out;
  out.reserve(bits.size());
  for (const auto& [b, count] : bits) {
    out.push_back(target.weight * 2.0 * gap * static_cast<double>(count) / den);
  }
  return out;
}

void combined_bit_step(std::vector<LearnableBitwidth>& bits,
                       const std::vector<double>& gradients, float lr) {
  if (bits.size() != gradients.size()) {
    throw std::invalid_argument("combined_bit_step: gradient count mismatch");
  }
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i].b -= lr * static_cast<float>(gradients[i]);
    bits[i].clamp();
  }
}

BitPolicy finalize_bits(const std::vector<ContinuousBit>& bits) {
  BitPolicy policy;
  double wn = 0.0, wd = 0.0, an = 0.0, ad = 0.0;
  for (const ContinuousBit& cb : bits) {
    quant::BitRange r = quant::scheme_bit_range(cb.scheme);
    int rounded = static_cast<int>(quant::round_half_away(cb.b));
    rounded = std::max(r.lo, std::min(r.hi, rounded));
    policy.per_quantizer.push_back(
        {cb.quantizer_id, cb.scheme, rounded, cb.elem_count, cb.is_weight});
    double contrib = static_cast<double>(rounded) * static_cast<double>(cb.elem_count);
    if (cb.is_weight) {
      wn += contrib;
      wd += static_cast<double>(cb.elem_count);
    } else {
      an += contrib;
      ad += static_cast<double>(cb.elem_count);
    }
  }
  policy.avg_weight_bits = wd > 0.0 ? wn / wd : 0.0;
  policy.avg_act_bits = ad > 0.0 ? an / ad : 0.0;
  policy.avg_all_bits = (wd + ad) > 0.0 ? (wn + an) / (wd + ad) : 0.0;
  return policy;
}

}  // namespace autoqnn::qpl
