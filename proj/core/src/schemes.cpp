// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/schemes.hpp"

#include <cmath>
#include <stdexcept>

namespace autoqnn::quant {

namespace {

void require_bits(SchemeId s, int b) {
  BitRange r = scheme_bit_range(s);
  if (b < r.lo || b > r.hi) {
    throw std::invalid_argument(scheme_name(s) + ": bitwidth " + std::to_string(b) +
                                " outside range [" + std::to_string(r.lo) + "," +
                                std::to_string(r.hi) + "]");
  }
}

void require_nonempty(const Tensor& d, SchemeId s) {
  if (d.numel() == 0) {
    throw std::invalid_argument(scheme_name(s) + ": empty tensor");
  }
}

double mean_abs(const Tensor& d) {
  double acc = 0.0;
  for (float v : d.data()) acc += std::fabs(v);
  return acc / static_cast<double>(d.numel());
}

float clipf(float x, float lo, float hi) { return std::min(std::max(x, lo), hi); }

}  // namespace

BitRange scheme_bit_range(SchemeId s) {
  switch (s) {
    case SchemeId::Binary: return {1, 1};
    case SchemeId::Ternary: return {2, 2};
    case SchemeId::Quaternary: return {2, 2};
    case SchemeId::FixedQ: return {2, 8};
    case SchemeId::ResQ: return {2, 8};
    case SchemeId::ZoomQ: return {2, 8};
    case SchemeId::ClipQ: return {2, 8};
    case SchemeId::PotQ: return {2, 4};
  }
  throw std::logic_error("unknown scheme");
}

bool scheme_has_free_bits(SchemeId s) {
  switch (s) {
    case SchemeId::Binary:
    case SchemeId::Ternary:
    case SchemeId::Quaternary:
      return false;
    default:
      return true;
  }
}

bool scheme_takes_alpha(SchemeId s) {
  return s == SchemeId::ClipQ || s == SchemeId::PotQ;
}

std::string scheme_name(SchemeId s) {
  switch (s) {
    case SchemeId::Binary: return "binary";
    case SchemeId::Ternary: return "ternary";
    case SchemeId::Quaternary: return "quaternary";
    case SchemeId::FixedQ: return "fixedq";
    case SchemeId::ResQ: return "resq";
    case SchemeId::ZoomQ: return "zoomq";
    case SchemeId::ClipQ: return "clipq";
    case SchemeId::PotQ: return "potq";
  }
  throw std::logic_error("unknown scheme");
}

SchemeId scheme_from_name(const std::string& name) {
  if (name == "binary") return SchemeId::Binary;
  if (name == "ternary") return SchemeId::Ternary;
  if (name == "quaternary") return SchemeId::Quaternary;
  if (name == "fixedq") return SchemeId::FixedQ;
  if (name == "resq") return SchemeId::ResQ;
  if (name == "zoomq") return SchemeId::ZoomQ;
  if (name == "clipq") return SchemeId::ClipQ;
  if (name == "potq") return SchemeId::PotQ;
  throw std::invalid_argument("unknown quantizing scheme '" + name + "'");
}

float round_half_away(float x) {
  return x >= 0.0f ? std::floor(x + 0.5f) : std::ceil(x - 0.5f);
}

float sign_nonpos(float x) { return x > 0.0f ? 1.0f : -1.0f; }

Tensor apply_binary(const Tensor& d, float alpha) {
  std::vector<float> out(d.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * sign_nonpos(d.at(i));
  return Tensor(d.shape(), std::move(out));
}

QuantResult quantize_binary(const Tensor& d) {
  require_nonempty(d, SchemeId::Binary);
  float alpha = static_cast<float>(mean_abs(d));
  return {apply_binary(d, alpha), alpha, alpha};
}

Tensor apply_ternary(const Tensor& d, float alpha, float beta) {
  std::vector<float> out(d.numel());
  if (beta == 0.0f) {
    return Tensor(d.shape(), std::vector<float>(d.numel(), 0.0f));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    float r = round_half_away(d.at(i) / (2.0f * beta));
    out[i] = alpha * clipf(r, -1.0f, 1.0f);
  }
  return Tensor(d.shape(), std::move(out));
}

QuantResult quantize_ternary(const Tensor& d) {
  require_nonempty(d, SchemeId::Ternary);
  float beta = 0.7f * static_cast<float>(mean_abs(d));
  // support set uses |x| > beta (TWN reading)
  double acc = 0.0;
  std::size_t count = 0;
  for (float v : d.data()) {
    if (std::fabs(v) > beta) {
      acc += std::fabs(v);
      ++count;
    }
  }
  float alpha = count ? static_cast<float>(acc / static_cast<double>(count)) : 0.0f;
  return {apply_ternary(d, alpha, beta), alpha, beta};
}

Tensor apply_quaternary(const Tensor& d, float alpha) {
  if (alpha == 0.0f) {
    return Tensor(d.shape(), std::vector<float>(d.numel(), 0.0f));
  }
  std::vector<float> out(d.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    float f = std::floor(d.at(i) / alpha);
    out[i] = alpha * (clipf(f, -2.0f, 1.0f) + 0.5f);
  }
  return Tensor(d.shape(), std::move(out));
}

QuantResult quantize_quaternary(const Tensor& d) {
  require_nonempty(d, SchemeId::Quaternary);
  double mu = 0.0;
  for (float v : d.data()) mu += v;
  mu /= static_cast<double>(d.numel());
  double var = 0.0;
  for (float v : d.data()) var += (v - mu) * (v - mu);
  var /= static_cast<double>(d.numel());  // population variance
  float alpha = static_cast<float>(std::sqrt(var));
  return {apply_quaternary(d, alpha), alpha, alpha};
}

Tensor apply_fixed(const Tensor& d, int b, float alpha) {
  if (alpha == 0.0f) {
    return Tensor(d.shape(), std::vector<float>(d.numel(), 0.0f));
  }
  // saturate to the 2^b two's-complement codes of the fixed-point format
  float lo = -std::exp2f(static_cast<float>(b - 1));
  float hi = std::exp2f(static_cast<float>(b - 1)) - 1.0f;
  std::vector<float> out(d.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = alpha * clipf(round_half_away(d.at(i) / alpha), lo, hi);
  }
  return Tensor(d.shape(), std::move(out));
}

QuantResult quantize_fixed(const Tensor& d, int b) {
  require_nonempty(d, SchemeId::FixedQ);
  require_bits(SchemeId::FixedQ, b);
  float maxabs = 0.0f;
  for (float v : d.data()) maxabs = std::max(maxabs, std::fabs(v));
  if (maxabs == 0.0f) {
    return {Tensor(d.shape(), std::vector<float>(d.numel(), 0.0f)), 0.0f, 0.0f};
  }
  float p = std::floor(std::log2(maxabs)) - static_cast<float>(b - 2);
  float alpha = std::exp2f(p);
  return {apply_fixed(d, b, alpha), alpha, alpha};
}

QuantResult quantize_res(const Tensor& d, int b) {
  require_nonempty(d, SchemeId::ResQ);
  if (b != 1) require_bits(SchemeId::ResQ, b);  // b=1 degenerates to binary
  std::vector<float> q(d.numel(), 0.0f);
  std::vector<float> v(d.data().begin(), d.data().end());
  float first_alpha = 0.0f;
  for (int pass = 0; pass < b; ++pass) {
    double acc = 0.0;
    for (float x : v) acc += std::fabs(x);
    float alpha = static_cast<float>(acc / static_cast<double>(v.size()));
    if (pass == 0) first_alpha = alpha;
    for (std::size_t i = 0; i < v.size(); ++i) {
      float bi = alpha * sign_nonpos(v[i]);
      q[i] += bi;
      v[i] -= bi;
    }
  }
  return {Tensor(d.shape(), std::move(q)), first_alpha, first_alpha};
}

Tensor apply_zoom(const Tensor& d, int b, float alpha, float beta) {
  if (alpha == 0.0f) {
    return d;  // zero range: constant tensor passes through unchanged
  }
  float hi = std::exp2f(static_cast<float>(b)) - 1.0f;
  std::vector<float> out(d.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    float f = std::floor((d.at(i) - beta) / alpha);
    out[i] = alpha * clipf(f, 0.0f, hi) + beta + alpha * 0.5f;
  }
  return Tensor(d.shape(), std::move(out));
}

QuantResult quantize_zoom(const Tensor& d, int b) {
  require_nonempty(d, SchemeId::ZoomQ);
  require_bits(SchemeId::ZoomQ, b);
  float mx = d.at(0), mn = d.at(0);
  for (float v : d.data()) {
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  float alpha = (mx - mn) / std::exp2f(static_cast<float>(b));
  float beta = mn;
  return {apply_zoom(d, b, alpha, beta), alpha, beta};
}

QuantResult quantize_clip(const Tensor& d, int b, float alpha) {
  require_nonempty(d, SchemeId::ClipQ);
  require_bits(SchemeId::ClipQ, b);
  if (alpha <= 0.0f) {
    throw std::invalid_argument("clipq: alpha must be positive");
  }
  float lo = -std::exp2f(static_cast<float>(b - 1));
  float hi = std::exp2f(static_cast<float>(b - 1)) - 1.0f;
  std::vector<float> out(d.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    float f = std::floor(d.at(i) / alpha);
    out[i] = alpha * (clipf(f, lo, hi) + 0.5f);
  }
  return {Tensor(d.shape(), std::move(out)), alpha, alpha};
}

QuantResult quantize_pot(const Tensor& d, int b, float alpha) {
  require_nonempty(d, SchemeId::PotQ);
  require_bits(SchemeId::PotQ, b);
  if (alpha <= 0.0f) {
    throw std::invalid_argument("potq: alpha must be positive");
  }
  float hi = std::exp2f(static_cast<float>(b - 1)) - 1.0f;
  std::vector<float> out(d.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    float x = d.at(i);
    if (x == 0.0f) {
      out[i] = 0.0f;  // exact zero stays zero; log2(0) has no projection
      continue;
    }
    float v = clipf(round_half_away(std::log2(std::fabs(x) / alpha)), 0.0f, hi);
    float e = v - (v == 0.0f ? 1.0f : 0.0f);
    out[i] = alpha * sign_nonpos(x) * std::exp2f(e);
  }
  return {Tensor(d.shape(), std::move(out)), alpha, alpha};
}

QuantResult quantize(const Tensor& d, const QuantConfig& cfg) {
  int b = static_cast<int>(round_half_away(cfg.b));
  switch (cfg.scheme) {
    case SchemeId::Binary: return quantize_binary(d);
    case SchemeId::Ternary: return quantize_ternary(d);
    case SchemeId::Quaternary: return quantize_quaternary(d);
    case SchemeId::FixedQ: return quantize_fixed(d, b);
    case SchemeId::ResQ: return quantize_res(d, b);
    case SchemeId::ZoomQ: return quantize_zoom(d, b);
    case SchemeId::ClipQ: return quantize_clip(d, b, cfg.alpha);
    case SchemeId::PotQ: return quantize_pot(d, b, cfg.alpha);
  }
  throw std::logic_error("unknown scheme");
}

ValueId quantize_on_tape(Tape& tape, ValueId d, const QuantConfig& cfg) {
  QuantConfig local = cfg;
  return tape.custom_grad(
      d, [local](const Tensor& t) { return quantize(t, local).values; }, cfg.lambda);
}

double quantization_loss(const Tensor& d, const Tensor& q) {
  if (!d.same_shape(q)) {
    throw std::invalid_argument("quantization_loss: shape mismatch " + d.shape_str() +
                                " vs " + q.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < d.numel(); ++i) {
    double e = static_cast<double>(d.at(i)) - static_cast<double>(q.at(i));
    acc += e * e;
  }
  return acc / static_cast<double>(d.numel());
}

}  // namespace autoqnn::quant
