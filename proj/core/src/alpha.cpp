// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/alpha.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace autoqnn::quant {

namespace {
constexpr const char* kHeader = "# autoqnn-alphas v1";
}

AlphaTable AlphaTable::builtin_defaults() {
  AlphaTable t;
  const float clip[] = {1.2832f, 0.6694f, 0.3570f, 0.1939f, 0.1056f, 0.0573f, 0.0308f};
  for (int b = 2; b <= 8; ++b) t.set(SchemeId::ClipQ, b, clip[b - 2]);
  const float pot[] = {1.2240f, 0.5181f, 0.0381f};
  for (int b = 2; b <= 4; ++b) t.set(SchemeId::PotQ, b, pot[b - 2]);
  return t;
}

void AlphaTable::set(SchemeId scheme, int b, float alpha) {
  entries_[{static_cast<int>(scheme), b}] = alpha;
}

std::optional<float> AlphaTable::get(SchemeId scheme, int b) const {
  auto it = entries_.find({static_cast<int>(scheme), b});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

float AlphaTable::require(SchemeId scheme, int b) const {
  auto v = get(scheme, b);
  if (!v) {
    throw std::runtime_error("alpha table has no entry for " + scheme_name(scheme) +
                             " b=" + std::to_string(b));
  }
  return *v;
}

bool AlphaTable::complete() const {
  for (int b = 2; b <= 8; ++b)
    if (!get(SchemeId::ClipQ, b)) return false;
  for (int b = 2; b <= 4; ++b)
    if (!get(SchemeId::PotQ, b)) return false;
  return true;
}

void AlphaTable::save(std::ostream& os) const {
  os << kHeader << "\n";
  char buf[64];
  for (const auto& [key, alpha] : entries_) {
    // %.9g round-trips binary32 exactly
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(alpha));
    os << scheme_name(static_cast<SchemeId>(key.first)) << " " << key.second << " "
       << buf << "\n";
  }
}

void AlphaTable::save_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write alpha table: " + path);
  save(os);
}

AlphaTable AlphaTable::load(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kHeader) {
    throw std::runtime_error("alpha table: missing header '" + std::string(kHeader) + "'");
  }
  AlphaTable t;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name;
    int b;
    float alpha;
    if (!(ls >> name >> b >> alpha)) {
      throw std::runtime_error("alpha table: malformed line '" + line + "'");
    }
    t.set(scheme_from_name(name), b, alpha);
  }
  return t;
}

AlphaTable AlphaTable::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read alpha table: " + path);
  return load(is);
}

namespace {

double mse_at(SchemeId scheme, int b, const Tensor& pop, float alpha) {
  QuantResult r = scheme == SchemeId::ClipQ ? quantize_clip(pop, b, alpha)
                                            : quantize_pot(pop, b, alpha);
  return quantization_loss(pop, r.values);
}

}  // namespace

AlphaResult optimize_alpha(SchemeId scheme, int b, const Sampler& sampler,
                           std::size_t n, std::uint64_t seed) {
  if (!scheme_takes_alpha(scheme)) {
    throw std::invalid_argument("optimize_alpha: " + scheme_name(scheme) +
                                " has no free alpha");
  }
  if (n < 100000) {
    throw std::invalid_argument("optimize_alpha: need at least 1e5 samples, got " +
                                std::to_string(n));
  }
  BitRange r = scheme_bit_range(scheme);
  if (b < r.lo || b > r.hi) {
    throw std::invalid_argument("optimize_alpha: bitwidth " + std::to_string(b) +
                                " outside " + scheme_name(scheme) + " range");
  }

  Rng rng(seed);
  std::vector<float> samples(n);
  for (auto& v : samples) v = static_cast<float>(sampler(rng));
  Tensor pop({n}, std::move(samples));

  auto f = [&](double a) { return mse_at(scheme, b, pop, static_cast<float>(a)); };

  // coarse scan brackets the minimum and exposes non-unimodal landscapes
  constexpr int kCoarse = 64;
  constexpr double kLo = 1e-4, kHi = 8.0;
  double best_grid = 0.0, best_grid_mse = 0.0;
  int best_i = 0;
  std::vector<double> coarse(kCoarse + 1);
  for (int i = 0; i <= kCoarse; ++i) {
    double a = kLo + (kHi - kLo) * i / kCoarse;
    coarse[i] = f(a);
    if (i == 0 || coarse[i] < best_grid_mse) {
      best_grid_mse = coarse[i];
      best_grid = a;
      best_i = i;
    }
  }
  double lo = kLo + (kHi - kLo) * std::max(0, best_i - 1) / kCoarse;
  double hi = kLo + (kHi - kLo) * std::min(kCoarse, best_i + 1) / kCoarse;

  constexpr double kGr = 0.6180339887498949;
  double a = lo, c = hi;
  double x1 = c - kGr * (c - a), x2 = a + kGr * (c - a);
  double f1 = f(x1), f2 = f(x2);
  while (c - a > 1e-4) {
    if (f1 < f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - kGr * (c - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGr * (c - a);
      f2 = f(x2);
    }
  }
  double alpha = 0.5 * (a + c);
  double alpha_mse = f(alpha);

  AlphaResult res;
  res.grid_fallback = false;
  if (alpha_mse > best_grid_mse * (1.0 + 1e-9) + 1e-12) {
    // bracketing failed; dense 1e-3 grid over the best coarse cell
    double glo = std::max(kLo, best_grid - (kHi - kLo) / kCoarse);
    double ghi = std::min(kHi, best_grid + (kHi - kLo) / kCoarse);
    double best = glo, best_mse = f(glo);
    for (double x = glo; x <= ghi; x += 1e-3) {
      double m = f(x);
      if (m < best_mse) {
        best_mse = m;
        best = x;
      }
    }
    alpha = best;
    alpha_mse = best_mse;
    res.grid_fallback = true;
  }
  res.alpha = static_cast<float>(alpha);
  res.mse = alpha_mse;
  return res;
}

Sampler standard_normal_sampler() {
  return [](Rng& rng) { return rng.normal(); };
}

}  // namespace autoqnn::quant
