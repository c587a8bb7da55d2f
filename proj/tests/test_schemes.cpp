// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>
#include <string>

#include <cmath>
#include <set>

#include "autoqnn/schemes.hpp"
#include "autoqnn/tape.hpp"
#include "testutil.hpp"

using namespace autoqnn;
using namespace autoqnn::quant;

namespace {

// Independent scalar re-implementations used as oracles. They derive their
// own scales in double precision and never touch the library kernels.
namespace oracle {

double mean_abs(const std::vector<float>& d) {
  double s = 0;
  for (float v : d) s += std::fabs(v);
  return s / d.size();
}

double sign(double x) { return x > 0 ? 1.0 : -1.0; }
double rnd(double x) { return x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5); }
double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

std::vector<double> binary(const std::vector<float>& d) {
  double a = mean_abs(d);
  std::vector<double> out;
  for (float v : d) out.push_back(a * sign(v));
  return out;
}

std::vector<double> ternary(const std::vector<float>& d) {
  double beta = 0.7 * mean_abs(d);
  double a = 0;
  std::size_t n = 0;
  for (float v : d)
    if (std::fabs(v) > beta) {
      a += std::fabs(v);
      ++n;
    }
  a = n ? a / n : 0.0;
  std::vector<double> out;
  for (float v : d) {
    out.push_back(beta == 0 ? 0.0 : a * clip(rnd(v / (2 * beta)), -1, 1));
  }
  return out;
}

std::vector<double> quaternary(const std::vector<float>& d) {
  double mu = 0;
  for (float v : d) mu += v;
  mu /= d.size();
  double var = 0;
  for (float v : d) var += (v - mu) * (v - mu);
  var /= d.size();
  double a = std::sqrt(var);
  std::vector<double> out;
  for (float v : d) {
    out.push_back(a == 0 ? 0.0 : a * (clip(std::floor(v / a), -2, 1) + 0.5));
  }
  return out;
}

std::vector<double> fixedq(const std::vector<float>& d, int b) {
  double m = 0;
  for (float v : d) m = std::max(m, static_cast<double>(std::fabs(v)));
  std::vector<double> out;
  if (m == 0) return std::vector<double>(d.size(), 0.0);
  double p = std::floor(std::log2(m)) - (b - 2);
  double a = std::exp2(p);
  for (float v : d)
    out.push_back(a * clip(rnd(v / a), -std::exp2(b - 1), std::exp2(b - 1) - 1));
  return out;
}

std::vector<double> resq(const std::vector<float>& d, int b) {
  std::vector<double> q(d.size(), 0.0), v(d.begin(), d.end());
  for (int i = 0; i < b; ++i) {
    double a = 0;
    for (double x : v) a += std::fabs(x);
    a /= v.size();
    for (std::size_t j = 0; j < v.size(); ++j) {
      double bj = a * sign(v[j]);
      q[j] += bj;
      v[j] -= bj;
    }
  }
  return q;
}

std::vector<double> zoomq(const std::vector<float>& d, int b) {
  double mx = d[0], mn = d[0];
  for (float v : d) {
    mx = std::max(mx, static_cast<double>(v));
    mn = std::min(mn, static_cast<double>(v));
  }
  double a = (mx - mn) / std::exp2(b);
  std::vector<double> out;
  for (float v : d) {
    if (a == 0) {
      out.push_back(v);
    } else {
      out.push_back(a * clip(std::floor((v - mn) / a), 0, std::exp2(b) - 1) + mn + a / 2);
    }
  }
  return out;
}

std::vector<double> clipq(const std::vector<float>& d, int b, double a) {
  std::vector<double> out;
  for (float v : d) {
    out.push_back(a * (clip(std::floor(v / a), -std::exp2(b - 1), std::exp2(b - 1) - 1) + 0.5));
  }
  return out;
}

std::vector<double> potq(const std::vector<float>& d, int b, double a) {
  std::vector<double> out;
  for (float x : d) {
    if (x == 0) {
      out.push_back(0.0);
      continue;
    }
    double v = clip(rnd(std::log2(std::fabs(x) / a)), 0, std::exp2(b - 1) - 1);
    double e = v - (v == 0 ? 1 : 0);
    out.push_back(a * sign(x) * std::exp2(e));
  }
  return out;
}

}  // namespace oracle

void check_matches(const Tensor& got, const std::vector<double>& want, double tol = 1e-5) {
  REQUIRE(got.numel() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(got.at(i) == doctest::Approx(want[i]).epsilon(tol));
  }
}

}  // namespace

TEST_CASE("binary examples") {
  QuantResult r = quantize_binary(Tensor::vector({1, -1}));
  CHECK(r.alpha == doctest::Approx(1.0));
  check_matches(r.values, {1, -1});

  r = quantize_binary(Tensor::vector({0.5f, -1.5f}));
  CHECK(r.alpha == doctest::Approx(1.0));
  check_matches(r.values, {1, -1});

  r = quantize_binary(Tensor::vector({0, 0}));
  CHECK(r.alpha == 0.0f);
  check_matches(r.values, {0, 0});  // sign(0) = -1 scaled by alpha = 0
}

TEST_CASE("ternary examples") {
  QuantResult r = quantize_ternary(Tensor::vector({1, -1, 1, -1}));
  CHECK(r.beta == doctest::Approx(0.7));
  CHECK(r.alpha == doctest::Approx(1.0));
  check_matches(r.values, {1, -1, 1, -1});

  r = quantize_ternary(Tensor::vector({0.1f, -0.1f}));
  CHECK(r.beta == doctest::Approx(0.07));
  CHECK(r.alpha == doctest::Approx(0.1));
  check_matches(r.values, {0.1, -0.1});

  r = quantize_ternary(Tensor::vector({0, 0, 0}));
  CHECK(r.alpha == 0.0f);
  check_matches(r.values, {0, 0, 0});
}

TEST_CASE("quaternary examples") {
  QuantResult r = quantize_quaternary(Tensor::vector({1, -1}));
  CHECK(r.alpha == doctest::Approx(1.0));
  check_matches(r.values, {1.5, -0.5});

  r = quantize_quaternary(Tensor::vector({2, 2, 2}));
  CHECK(r.alpha == 0.0f);  // zero variance
  check_matches(r.values, {0, 0, 0});

  r = quantize_quaternary(Tensor::vector({2, -2, 2, -2}));
  CHECK(r.alpha == doctest::Approx(2.0));
  check_matches(r.values, {3, -1, 3, -1});
}

TEST_CASE("fixedq examples") {
  QuantResult r = quantize_fixed(Tensor::vector({3.2f, -1.0f}), 3);
  CHECK(r.alpha == doctest::Approx(1.0));
  check_matches(r.values, {3, -1});

  r = quantize_fixed(Tensor::vector({1.0f}), 2);
  CHECK(r.alpha == doctest::Approx(1.0));
  check_matches(r.values, {1});

  r = quantize_fixed(Tensor::vector({0, 0, 0}), 4);
  check_matches(r.values, {0, 0, 0});

  CHECK_THROWS_AS(quantize_fixed(Tensor::vector({1}), 9), std::invalid_argument);
}

TEST_CASE("resq examples") {
  QuantResult r = quantize_res(Tensor::vector({1, -1}), 2);
  check_matches(r.values, {1, -1});  // exact after one pass, residual zero

  r = quantize_res(Tensor::vector({3, 1}), 2);
  check_matches(r.values, {3, 1});  // pass1 [2,2], residual [1,-1], pass2 [1,-1]

  // b=1 reduces exactly to binary
  Rng rng(3);
  std::vector<float> v = testutil::random_vector(32, rng);
  QuantResult res1 = quantize_res(Tensor::vector(v), 1);
  QuantResult bin = quantize_binary(Tensor::vector(v));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(res1.values.at(i) == bin.values.at(i));
}

TEST_CASE("zoomq examples") {
  QuantResult r = quantize_zoom(Tensor::vector({0, 1, 2, 3}), 2);
  CHECK(r.alpha == doctest::Approx(0.75));
  check_matches(r.values, {0.375, 1.125, 1.875, 2.625});

  Tensor constant = Tensor::vector({5, 5, 5});
  r = quantize_zoom(constant, 3);
  check_matches(r.values, {5, 5, 5});  // zero range passes through

  // the max element maps to beta + (2^b - 1) alpha + alpha/2 (top clip binds)
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<float> v = testutil::random_vector(17, rng, -3.0, 3.0);
    int b = 2 + rep % 4;
    QuantResult q = quantize_zoom(Tensor::vector(v), b);
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[argmax]) argmax = i;
    double expected =
        q.beta + (std::exp2(b) - 1) * q.alpha + q.alpha / 2.0;
    CHECK(q.values.at(argmax) == doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("clipq examples") {
  QuantResult r = quantize_clip(Tensor::vector({0.5f}), 2, 1.2832f);
  check_matches(r.values, {0.6416});

  r = quantize_clip(Tensor::vector({-100.0f}), 2, 1.2832f);
  check_matches(r.values, {-1.9248});

  CHECK_THROWS_AS(quantize_clip(Tensor::vector({1}), 2, -1.0f), std::invalid_argument);
  CHECK_THROWS_AS(quantize_clip(Tensor::vector({1}), 1, 1.0f), std::invalid_argument);
}

TEST_CASE("potq examples") {
  QuantResult r = quantize_pot(Tensor::vector({1.0f}), 3, 0.5181f);
  check_matches(r.values, {1.0362});

  r = quantize_pot(Tensor::vector({0.01f}), 3, 0.5181f);
  check_matches(r.values, {0.25905});  // v clips to 0, e = -1

  r = quantize_pot(Tensor::vector({0.0f, 1.0f}), 3, 0.5181f);
  CHECK(r.values.at(0) == 0.0f);  // exact zero emits zero

  CHECK_THROWS_AS(quantize_pot(Tensor::vector({1}), 5, 1.0f), std::invalid_argument);
}

TEST_CASE("kernels agree with the independent scalar oracle on random data") {
  Rng rng(202);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<float> v = testutil::random_vector(41, rng, -3.0, 3.0);
    Tensor d = Tensor::vector(v);
    int b = 2 + rep % 7;

    check_matches(quantize_binary(d).values, oracle::binary(v));
    check_matches(quantize_ternary(d).values, oracle::ternary(v));
    check_matches(quantize_quaternary(d).values, oracle::quaternary(v));
    check_matches(quantize_fixed(d, b).values, oracle::fixedq(v, b));
    check_matches(quantize_res(d, std::min(b, 8)).values, oracle::resq(v, std::min(b, 8)));
    check_matches(quantize_zoom(d, b).values, oracle::zoomq(v, b));
    check_matches(quantize_clip(d, b, 0.6694f).values, oracle::clipq(v, b, 0.6694f));
    int pb = 2 + rep % 3;
    check_matches(quantize_pot(d, pb, 0.5181f).values, oracle::potq(v, pb, 0.5181f));
  }
}

TEST_CASE("re-quantizing with the same pinned config is a fixed point") {
  Rng rng(17);
  std::vector<float> v = testutil::random_vector(64, rng, -2.5, 2.5);
  Tensor d = Tensor::vector(v);

  auto ulp_equal = [](const Tensor& a, const Tensor& b) {
    for (std::size_t i = 0; i < a.numel(); ++i) {
      float x = a.at(i), y = b.at(i);
      if (x != y && std::nextafter(x, y) != y) return false;
    }
    return true;
  };

  {
    QuantResult q = quantize_zoom(d, 3);
    Tensor again = apply_zoom(q.values, 3, q.alpha, q.beta);
    CHECK(ulp_equal(q.values, again));
  }
  {
    QuantResult q = quantize_fixed(d, 4);
    Tensor again = apply_fixed(q.values, 4, q.alpha);
    CHECK(ulp_equal(q.values, again));
  }
  {
    QuantResult q = quantize_clip(d, 3, 0.6694f);
    QuantResult again = quantize_clip(q.values, 3, 0.6694f);
    CHECK(ulp_equal(q.values, again.values));
  }
  {
    QuantResult q = quantize_pot(d, 3, 0.5181f);
    QuantResult again = quantize_pot(q.values, 3, 0.5181f);
    CHECK(ulp_equal(q.values, again.values));
  }
}

TEST_CASE("output cardinality never exceeds the bit budget") {
  Rng rng(29);
  auto distinct = [](const Tensor& t) {
    std::set<float> s(t.data().begin(), t.data().end());
    return s.size();
  };
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<float> v = testutil::random_vector(200, rng, -4.0, 4.0);
    Tensor d = Tensor::vector(v);
    CHECK(distinct(quantize_binary(d).values) <= 2);
    CHECK(distinct(quantize_ternary(d).values) <= 3);
    CHECK(distinct(quantize_quaternary(d).values) <= 4);
    for (int b = 2; b <= 8; ++b) {
      CHECK(distinct(quantize_fixed(d, b).values) <= (1u << b));
      CHECK(distinct(quantize_zoom(d, b).values) <= (1u << b));
      CHECK(distinct(quantize_clip(d, b, 0.3570f).values) <= (1u << b));
      CHECK(distinct(quantize_res(d, b).values) <= (1u << b));
    }
    for (int b = 2; b <= 4; ++b) {
      CHECK(distinct(quantize_pot(d, b, 0.5181f).values) <= (1u << b));
    }
  }
}

TEST_CASE("tape backward through every scheme is exactly lambda * upstream") {
  Rng rng(31);
  std::vector<float> v = testutil::random_vector(16, rng);
  std::vector<float> upstream = testutil::random_vector(16, rng);

  std::vector<QuantConfig> configs;
  for (SchemeId s : {SchemeId::Binary, SchemeId::Ternary, SchemeId::Quaternary,
                     SchemeId::FixedQ, SchemeId::ResQ, SchemeId::ZoomQ}) {
    QuantConfig c;
    c.scheme = s;
    c.b = scheme_has_free_bits(s) ? 3.0f : static_cast<float>(scheme_bit_range(s).hi);
    configs.push_back(c);
  }
  QuantConfig clip;
  clip.scheme = SchemeId::ClipQ;
  clip.b = 3;
  clip.alpha = 0.6694f;
  configs.push_back(clip);
  QuantConfig pot;
  pot.scheme = SchemeId::PotQ;
  pot.b = 3;
  pot.alpha = 0.5181f;
  configs.push_back(pot);

  for (float lambda : {1.0f, 0.5f, 2.0f}) {
    for (QuantConfig cfg : configs) {
      cfg.lambda = lambda;
      Tape t;
      ValueId x = t.leaf(Tensor::vector(v), true);
      ValueId q = quantize_on_tape(t, x, cfg);
      t.backward(q, Tensor::vector(upstream));
      for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(t.grad(x).at(i) == lambda * upstream[i]);  // exact
      }
    }
  }
}

TEST_CASE("scale equivariance holds for data-derived schemes and fails for fixed-alpha ones") {
  Rng rng(37);
  std::vector<float> v = testutil::random_vector(48, rng, -2.0, 2.0);
  Tensor d = Tensor::vector(v);
  const float c = 3.0f;
  std::vector<float> scaled(v);
  for (auto& x : scaled) x *= c;
  Tensor cd = Tensor::vector(scaled);

  auto equivariant = [&](auto&& f) {
    Tensor q1 = f(cd);
    Tensor q2 = f(d);
    for (std::size_t i = 0; i < q1.numel(); ++i) {
      if (std::fabs(q1.at(i) - c * q2.at(i)) >
          1e-4 * std::max(1.0f, std::fabs(q1.at(i))))
        return false;
    }
    return true;
  };

  CHECK(equivariant([](const Tensor& t) { return quantize_binary(t).values; }));
  CHECK(equivariant([](const Tensor& t) { return quantize_ternary(t).values; }));
  CHECK(equivariant([](const Tensor& t) { return quantize_quaternary(t).values; }));
  CHECK(equivariant([](const Tensor& t) { return quantize_zoom(t, 3).values; }));
  CHECK(equivariant([](const Tensor& t) { return quantize_res(t, 3).values; }));

  // fixed-alpha schemes are not equivariant; FixedQ snaps to powers of two
  CHECK_FALSE(equivariant([](const Tensor& t) { return quantize_clip(t, 3, 0.6694f).values; }));
  CHECK_FALSE(equivariant([](const Tensor& t) { return quantize_pot(t, 3, 0.5181f).values; }));
  CHECK_FALSE(equivariant([](const Tensor& t) { return quantize_fixed(t, 3).values; }));
}

TEST_CASE("quantization loss") {
  Tensor a = Tensor::vector({1, 0});
  CHECK(quantization_loss(a, a) == 0.0);
  CHECK(quantization_loss(a, Tensor::vector({0, 0})) == doctest::Approx(0.5));
  CHECK_THROWS_AS(quantization_loss(a, Tensor::vector({1, 2, 3})), std::invalid_argument);

  // binary on standard normal: E[(|x| - E|x|)^2] = 1 - 2/pi
  Rng rng(41);
  std::vector<float> v(100000);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  Tensor d = Tensor::vector(v);
  double mse = quantization_loss(d, quantize_binary(d).values);
  CHECK(mse == doctest::Approx(1.0 - 2.0 / M_PI).epsilon(0.03));
}
