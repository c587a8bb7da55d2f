// SPDX-License-Identifier: Apache-2.0
#include "autoqnn/rng.hpp"

#include <cmath>

namespace autoqnn {

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 over seed xor salt
  std::uint64_t z = seed ^ (salt + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng Rng::for_phase(std::uint64_t seed, std::string_view phase) {
  std::uint64_t salt = 1469598103934665603ULL;  // FNV-1a over the phase name
  for (char c : phase) {
    salt ^= static_cast<unsigned char>(c);
    salt *= 1099511628211ULL;
  }
  return Rng(hash_combine(seed, salt));
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform01() {
  // 53 random bits into [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::size_t Rng::uniform_index(std::size_t n) {
  return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform01(), u2 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

double Rng::logistic(double mu, double s) {
  double u = uniform01();
  while (u <= 0.0 || u >= 1.0) u = uniform01();
  return mu + s * std::log(u / (1.0 - u));
}

double Rng::exponential(double rate) {
  double u = uniform01();
  while (u <= 0.0) u = uniform01();
  return -std::log(u) / rate;
}

double Rng::gumbel() {
  double u = uniform01();
  while (u <= 0.0 || u >= 1.0) u = uniform01();
  return -std::log(-std::log(u));
}

}  // namespace autoqnn
