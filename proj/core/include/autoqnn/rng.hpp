// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace autoqnn {

/// Deterministic random source. All sampling in the project goes through
/// this wrapper so that a fixed seed reproduces a run bit-for-bit on the
/// same platform. Distribution transforms are implemented here rather than
/// with std:: distributions, whose algorithms vary across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derive an independent stream for a named phase of a run.
  static Rng for_phase(std::uint64_t seed, std::string_view phase);

  std::uint64_t next_u64();
  double uniform01();                       // [0, 1)
  double uniform(double lo, double hi);
  std::size_t uniform_index(std::size_t n);  // [0, n)
  double normal();                           // Box-Muller, standard normal
  double logistic(double mu, double s);
  double exponential(double rate);
  double gumbel();                           // Gumbel(0, 1)

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t salt);

}  // namespace autoqnn
