// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/bench.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "autoqnn/rng.hpp"

namespace autoqnn::pipeline {

std::string dist_name(DistKind k) {
  switch (k) {
    case DistKind::Uniform: return "uniform";
    case DistKind::Normal: return "normal";
    case DistKind::Logistic: return "logistic";
    case DistKind::Exponential: return "exponential";
    case DistKind::LogNormal: return "lognormal";
  }
  throw std::logic_error("unknown distribution");
}

DistKind dist_from_name(const std::string& name) {
  if (name == "uniform") return DistKind::Uniform;
  if (name == "normal") return DistKind::Normal;
  if (name == "logistic") return DistKind::Logistic;
  if (name == "exponential") return DistKind::Exponential;
  if (name == "lognormal") return DistKind::LogNormal;
  throw std::invalid_argument("unknown distribution '" + name + "'");
}

Tensor sample_distribution(const DistributionSpec& spec) {
  Rng rng(spec.seed);
  std::vector<float> out(spec.n);
  switch (spec.kind) {
    case DistKind::Uniform:
      for (auto& v : out) v = static_cast<float>(rng.uniform(spec.p1 - spec.p2, spec.p1 + spec.p2));
      break;
    case DistKind::Normal:
      for (auto& v : out) v = static_cast<float>(spec.p1 + spec.p2 * rng.normal());
      break;
    case DistKind::Logistic:
      for (auto& v : out) v = static_cast<float>(rng.logistic(spec.p1, spec.p2));
      break;
    case DistKind::Exponential:
      for (auto& v : out) v = static_cast<float>(rng.exponential(spec.p2));
      break;
    case DistKind::LogNormal:
      for (auto& v : out) v = static_cast<float>(std::exp(spec.p1 + spec.p2 * rng.normal()));
      break;
  }
  return Tensor({spec.n}, std::move(out));
}

std::vector<BenchRow> bench_distributions(const std::vector<quant::SchemeId>& schemes,
                                          const std::vector<int>& bit_list,
                                          const std::vector<DistKind>& dists,
                                          std::size_t n, std::uint64_t seed,
                                          const quant::AlphaTable& alphas) {
  std::vector<BenchRow> rows;
  for (DistKind dk : dists) {
    DistributionSpec spec;
    spec.kind = dk;
    if (dk == DistKind::Uniform) {
      spec.p1 = 0.0;
      spec.p2 = 1.0;  // U(-1, 1)
    }
    spec.n = n;
    spec.seed = hash_combine(seed, static_cast<std::uint64_t>(dk));
    Tensor pop = sample_distribution(spec);

    for (quant::SchemeId s : schemes) {
      for (int b : bit_list) {
        BenchRow row;
        row.distribution = dist_name(dk);
        row.scheme = quant::scheme_name(s);
        row.bits = b;
        quant::BitRange r = quant::scheme_bit_range(s);
        if (b < r.lo || b > r.hi) {
          row.skipped = true;
          row.mse = 0.0;
          row.note = "bits outside [" + std::to_string(r.lo) + "," +
                     std::to_string(r.hi) + "]";
          rows.push_back(std::move(row));
          continue;
        }
        quant::QuantConfig cfg;
        cfg.scheme = s;
        cfg.b = static_cast<float>(b);
        if (quant::scheme_takes_alpha(s)) cfg.alpha = alphas.require(s, b);
        quant::QuantResult q = quant::quantize(pop, cfg);
        row.mse = quant::quantization_loss(pop, q.values);
        row.skipped = false;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& os) {
  os << "distribution,scheme,bits,mse,note\n";
  char buf[64];
  for (const BenchRow& r : rows) {
    if (r.skipped) {
      os << r.distribution << "," << r.scheme << "," << r.bits << ",," << r.note << "\n";
    } else {
      std::snprintf(buf, sizeof(buf), "%.9g", r.mse);
      os << r.distribution << "," << r.scheme << "," << r.bits << "," << buf << ",\n";
    }
  }
}

}  // namespace autoqnn::pipeline
