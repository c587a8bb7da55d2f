// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "autoqnn/alpha.hpp"
#include "autoqnn/schemes.hpp"

namespace autoqnn::pipeline {

enum class DistKind { Uniform, Normal, Logistic, Exponential, LogNormal };

std::string dist_name(DistKind k);
DistKind dist_from_name(const std::string& name);

struct DistributionSpec {
  DistKind kind = DistKind::Normal;
  double p1 = 0.0;  // uniform lo / location / log-mean
  double p2 = 1.0;  // uniform hi / scale / rate / log-sigma
  std::size_t n = 100000;
  std::uint64_t seed = 0;
};

Tensor sample_distribution(const DistributionSpec& spec);

struct BenchRow {
  std::string distribution;
  std::string scheme;
  int bits;
  double mse;
  bool skipped;        // bits outside the scheme's range
  std::string note;
};

/// Quantization-loss table: every (distribution, scheme, bits) cell holds the
/// mean squared error of the scheme on fresh seeded samples. ClipQ/PotQ
/// scales come from the alpha table.
std::vector<BenchRow> bench_distributions(const std::vector<quant::SchemeId>& schemes,
                                          const std::vector<int>& bit_list,
                                          const std::vector<DistKind>& dists,
                                          std::size_t n, std::uint64_t seed,
                                          const quant::AlphaTable& alphas);

/// Comma-separated text, one row per cell.
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& os);

}  // namespace autoqnn::pipeline
