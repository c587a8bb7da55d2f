// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/qss.hpp"

#include <cmath>
#include <stdexcept>

namespace autoqnn::qss {

SearchMode search_mode_from_name(const std::string& name) {
  if (name == "fine") return SearchMode::FineGrained;
  if (name == "coarse") return SearchMode::CoarseGrained;
  throw std::invalid_argument("unknown search mode '" + name + "' (use fine|coarse)");
}

std::string search_mode_name(SearchMode m) {
  return m == SearchMode::FineGrained ? "fine" : "coarse";
}

SchemeSearchState::SchemeSearchState(std::vector<quant::QuantConfig> cands, SearchMode m)
    : candidates(std::move(cands)),
      theta(Tensor::zeros({candidates.size()})),
      mode(m) {
  if (candidates.size() < 2) {
    throw std::invalid_argument("scheme search needs at least 2 candidates");
  }
}

float temperature(const TemperatureSchedule& s, int epoch) {
  if (s.total_epochs <= 0) {
    throw std::invalid_argument("temperature: total epochs must be positive");
  }
  if (epoch < 0 || epoch > s.total_epochs) {
    throw std::invalid_argument("temperature: epoch " + std::to_string(epoch) +
                                " outside [0," + std::to_string(s.total_epochs) + "]");
  }
  if (epoch == s.total_epochs) return kTemperatureFloor;
  float frac = 1.0f - static_cast<float>(epoch) / static_cast<float>(s.total_epochs);
  // floor keeps the softmax defined and the schedule non-increasing
  return std::max(s.tau0 * std::pow(frac, s.exponent), kTemperatureFloor);
}

GumbelNoise GumbelNoise::draw(std::size_t n, Rng& rng) {
  GumbelNoise noise;
  noise.g.resize(n);
  for (auto& v : noise.g) v = static_cast<float>(rng.gumbel());
  return noise;
}

ValueId soft_quantize(Tape& tape, ValueId d, ValueId theta, const GumbelNoise& noise,
                      float tau, const std::vector<quant::QuantConfig>& candidates) {
  if (tau <= 0.0f) {
    throw std::invalid_argument("soft_quantize: temperature must be positive");
  }
  std::size_t n = candidates.size();
  if (tape.value(theta).numel() != n || noise.g.size() != n) {
    throw std::invalid_argument("soft_quantize: theta/noise length does not match " +
                                std::to_string(n) + " candidates");
  }
  ValueId g = tape.leaf(Tensor::vector(noise.g));
  ValueId logits = tape.scale(tape.add(theta, g), 1.0f / tau);
  ValueId p = tape.softmax(logits);

  ValueId acc = 0;
  bool first = true;
  for (std::size_t k = 0; k < n; ++k) {
    ValueId qk = quant::quantize_on_tape(tape, d, candidates[k]);
    ValueId weighted = tape.mul(qk, tape.index(p, k));
    acc = first ? weighted : tape.add(acc, weighted);
    first = false;
  }
  return acc;
}

std::size_t hard_select(const std::vector<float>& theta, const GumbelNoise* noise) {
  if (theta.empty()) throw std::invalid_argument("hard_select: empty theta");
  if (noise && noise->g.size() != theta.size()) {
    throw std::invalid_argument("hard_select: noise length mismatch");
  }
  std::size_t best = 0;
  float best_v = theta[0] + (noise ? noise->g[0] : 0.0f);
  for (std::size_t k = 1; k < theta.size(); ++k) {
    float v = theta[k] + (noise ? noise->g[k] : 0.0f);
    if (v > best_v) {  // ties keep the lowest index
      best_v = v;
      best = k;
    }
  }
  return best;
}

Tensor theta_gradient(const Tape& tape, ValueId theta) { return tape.grad(theta); }

std::vector<float> selection_probabilities(const std::vector<float>& theta) {
  float mx = theta.empty() ? 0.0f : theta[0];
  for (float v : theta) mx = std::max(mx, v);
  std::vector<float> p(theta.size());
  double z = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    p[i] = std::exp(theta[i] - mx);
    z += p[i];
  }
  for (float& v : p) v = static_cast<float>(v / z);
  return p;
}

namespace {

quant::QuantConfig make_candidate(quant::SchemeId s, int bits,
                                  const quant::AlphaTable& alphas) {
  quant::QuantConfig cfg;
  cfg.scheme = s;
  quant::BitRange r = quant::scheme_bit_range(s);
  cfg.b = static_cast<float>(std::min(std::max(bits, r.lo), r.hi));
  if (!quant::scheme_has_free_bits(s)) cfg.b = static_cast<float>(r.hi);
  if (quant::scheme_takes_alpha(s)) {
    cfg.alpha = alphas.require(s, static_cast<int>(cfg.b));
  }
  return cfg;
}

}  // namespace

std::vector<quant::QuantConfig> default_weight_candidates(int bits,
                                                          const quant::AlphaTable& alphas) {
  using quant::SchemeId;
  std::vector<quant::QuantConfig> out;
  for (SchemeId s : {SchemeId::Binary, SchemeId::Ternary, SchemeId::Quaternary,
                     SchemeId::FixedQ, SchemeId::ResQ, SchemeId::ZoomQ, SchemeId::ClipQ,
                     SchemeId::PotQ}) {
    out.push_back(make_candidate(s, bits, alphas));
  }
  return out;
}

std::vector<quant::QuantConfig> default_activation_candidates(
    int bits, const quant::AlphaTable& alphas) {
  using quant::SchemeId;
  std::vector<quant::QuantConfig> out;
  for (SchemeId s : {SchemeId::FixedQ, SchemeId::ResQ, SchemeId::ZoomQ, SchemeId::ClipQ,
                     SchemeId::PotQ}) {
    out.push_back(make_candidate(s, bits, alphas));
  }
  return out;
}

std::vector<quant::QuantConfig> candidates_from_names(const std::vector<std::string>& names,
                                                      int bits,
                                                      const quant::AlphaTable& alphas) {
  std::vector<quant::QuantConfig> out;
  for (const std::string& n : names) {
    out.push_back(make_candidate(quant::scheme_from_name(n), bits, alphas));
  }
  return out;
}

}  // namespace autoqnn::qss
