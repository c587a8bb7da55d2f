// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "autoqnn/rng.hpp"
#include "autoqnn/schemes.hpp"

namespace autoqnn::quant {

/// Scale table for the schemes whose alpha is optimized offline
/// (ClipQ b=2..8, PotQ b=2..4). Serializes to a versioned text file of
/// (scheme, bitwidth, alpha) triples that round-trips bit-exactly.
class AlphaTable {
 public:
  /// The published reference values; optimize-alpha regenerates measured ones.
  static AlphaTable builtin_defaults();

  void set(SchemeId scheme, int b, float alpha);
  std::optional<float> get(SchemeId scheme, int b) const;
  float require(SchemeId scheme, int b) const;
  bool complete() const;  // has all ClipQ 2..8 and PotQ 2..4 entries

  void save(std::ostream& os) const;
  void save_file(const std::string& path) const;
  static AlphaTable load(std::istream& is);
  static AlphaTable load_file(const std::string& path);

  const std::map<std::pair<int, int>, float>& entries() const { return entries_; }

 private:
  // key: (scheme as int, bitwidth)
  std::map<std::pair<int, int>, float> entries_;
};

using Sampler = std::function<double(Rng&)>;

struct AlphaResult {
  float alpha = 0.0f;
  double mse = 0.0;
  bool grid_fallback = false;  // golden-section bracketing failed
};

/// Minimize mean squared quantization error over a fixed seeded sample
/// population by golden-section search on alpha in (0, 8], absolute
/// tolerance 1e-4. Falls back to a dense 1e-3 grid around the best coarse
/// cell if the bracket is not unimodal.
AlphaResult optimize_alpha(SchemeId scheme, int b, const Sampler& sampler,
                           std::size_t n, std::uint64_t seed);

/// Standard normal sampler for the usual offline procedure.
Sampler standard_normal_sampler();

}  // namespace autoqnn::quant
