// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "autoqnn/rng.hpp"
#include "autoqnn/tensor.hpp"

namespace testutil {

/// Central finite differences of a scalar-valued function, h = 1e-3.
inline std::vector<double> finite_diff(
    const std::function<double(const std::vector<float>&)>& f, std::vector<float> x,
    double h = 1e-3) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    float keep = x[i];
    x[i] = static_cast<float>(keep + h);
    double up = f(x);
    x[i] = static_cast<float>(keep - h);
    double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Gradient check: relative error below tol, with an absolute floor for
/// entries where both sides vanish.
inline bool grad_close(const std::vector<double>& got, const std::vector<double>& want,
                       double tol = 1e-3, double abs_floor = 5e-5) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i) {
    double diff = std::fabs(got[i] - want[i]);
    double scale = std::max(std::fabs(got[i]), std::fabs(want[i]));
    if (diff > tol * scale && diff > abs_floor) return false;
  }
  return true;
}

inline std::vector<float> random_vector(std::size_t n, autoqnn::Rng& rng, double lo = -2.0,
                                        double hi = 2.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

inline std::vector<double> to_doubles(std::span<const float> s) {
  return std::vector<double>(s.begin(), s.end());
}

}  // namespace testutil
