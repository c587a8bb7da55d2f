// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>
#include <string>

#include <cmath>

#include "autoqnn/qss.hpp"
#include "testutil.hpp"

using namespace autoqnn;
using namespace autoqnn::qss;
using quant::QuantConfig;
using quant::SchemeId;

namespace {

std::vector<QuantConfig> three_candidates() {
  QuantConfig zoom{SchemeId::ZoomQ, 3.0f, 1.0f, 0.0f, 0.0f};
  QuantConfig fixed{SchemeId::FixedQ, 3.0f, 1.0f, 0.0f, 0.0f};
  QuantConfig clip{SchemeId::ClipQ, 3.0f, 1.0f, 0.6694f, 0.0f};
  return {zoom, fixed, clip};
}

double entropy(const std::vector<float>& p) {
  double h = 0;
  for (float x : p)
    if (x > 0) h -= x * std::log(x);
  return h;
}

std::vector<float> soft_probs(const std::vector<float>& theta,
                              const std::vector<float>& g, float tau) {
  std::vector<double> z(theta.size());
  double mx = -1e30;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    z[i] = (theta[i] + g[i]) / tau;
    mx = std::max(mx, z[i]);
  }
  double s = 0;
  std::vector<float> p(theta.size());
  for (std::size_t i = 0; i < z.size(); ++i) s += std::exp(z[i] - mx);
  for (std::size_t i = 0; i < z.size(); ++i)
    p[i] = static_cast<float>(std::exp(z[i] - mx) / s);
  return p;
}

}  // namespace

TEST_CASE("temperature schedule") {
  TemperatureSchedule s{5.0f, 100, 2.0f};
  CHECK(temperature(s, 0) == doctest::Approx(5.0));
  CHECK(temperature(s, 50) == doctest::Approx(1.25));
  CHECK(temperature(s, 100) == doctest::Approx(1e-3));  // floor, not zero
  CHECK_THROWS_AS(temperature(s, 101), std::invalid_argument);
  CHECK_THROWS_AS(temperature({5.0f, 0, 2.0f}, 0), std::invalid_argument);

  // non-increasing along the whole schedule
  float prev = 1e9;
  for (int e = 0; e <= 100; ++e) {
    float t = temperature(s, e);
    CHECK(t <= prev);
    prev = t;
  }
}

TEST_CASE("gumbel noise is reproducible under seed") {
  Rng a(123), b(123);
  GumbelNoise n1 = GumbelNoise::draw(8, a);
  GumbelNoise n2 = GumbelNoise::draw(8, b);
  CHECK(n1.g == n2.g);
  // matches -ln(-ln(u)) for the same stream
  Rng c(123);
  for (float v : n1.g) {
    double u = c.uniform01();
    CHECK(v == doctest::Approx(-std::log(-std::log(u))));
  }
}

TEST_CASE("soft_quantize high-temperature limit mixes uniformly") {
  Rng rng(7);
  auto cands = three_candidates();
  std::vector<float> xv = testutil::random_vector(24, rng);

  Tape tape;
  ValueId x = tape.leaf(Tensor::vector(xv), true);
  ValueId theta = tape.leaf(Tensor::zeros({3}), true);
  GumbelNoise noise = GumbelNoise::draw(3, rng);
  ValueId out = soft_quantize(tape, x, theta, noise, 1e9f, cands);

  // oracle: plain arithmetic mean of candidate outputs
  Tensor zoom = quant::quantize(Tensor::vector(xv), cands[0]).values;
  Tensor fixed = quant::quantize(Tensor::vector(xv), cands[1]).values;
  Tensor clip = quant::quantize(Tensor::vector(xv), cands[2]).values;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    double mean = (zoom.at(i) + fixed.at(i) + clip.at(i)) / 3.0;
    CHECK(std::fabs(tape.value(out).at(i) - mean) < 1e-4);
  }
}

TEST_CASE("soft_quantize low-temperature limit is one-hot") {
  Rng rng(8);
  auto cands = three_candidates();
  std::vector<float> xv = testutil::random_vector(24, rng);

  Tape tape;
  ValueId x = tape.leaf(Tensor::vector(xv), true);
  ValueId theta = tape.leaf(Tensor::vector({10.0f, 0.0f, 0.0f}), true);
  GumbelNoise noise = GumbelNoise::draw(3, rng);
  ValueId out = soft_quantize(tape, x, theta, noise, 1e-3f, cands);

  Tensor first = quant::quantize(Tensor::vector(xv), cands[0]).values;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    CHECK(std::fabs(tape.value(out).at(i) - first.at(i)) < 1e-4);
  }
  CHECK_THROWS_AS(soft_quantize(tape, x, theta, noise, 0.0f, cands),
                  std::invalid_argument);
}

TEST_CASE("theta gradient matches finite differences with frozen noise") {
  Rng rng(9);
  auto cands = three_candidates();
  std::vector<float> xv = testutil::random_vector(16, rng);
  std::vector<float> tv = testutil::random_vector(3, rng, -1.0, 1.0);
  GumbelNoise noise = GumbelNoise::draw(3, rng);
  const float tau = 1.3f;

  // double-precision oracle: p-weighted mix of the candidate outputs, frozen
  // noise, loss = sum(q^2); independent of the tape
  std::vector<Tensor> qs;
  for (const auto& c : cands) qs.push_back(quant::quantize(Tensor::vector(xv), c).values);
  auto loss_of = [&](const std::vector<float>& th) {
    std::vector<double> z(th.size());
    double mx = -1e300;
    for (std::size_t k = 0; k < th.size(); ++k) {
      z[k] = (static_cast<double>(th[k]) + noise.g[k]) / tau;
      mx = std::max(mx, z[k]);
    }
    double s = 0;
    for (double& v : z) {
      v = std::exp(v - mx);
      s += v;
    }
    double loss = 0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      double q = 0;
      for (std::size_t k = 0; k < z.size(); ++k) q += (z[k] / s) * qs[k].at(i);
      loss += q * q;
    }
    return loss;
  };

  Tape tape;
  ValueId x = tape.leaf(Tensor::vector(xv), true);
  ValueId theta = tape.leaf(Tensor::vector(tv), true);
  ValueId q = soft_quantize(tape, x, theta, noise, tau, cands);
  tape.backward(tape.sum(tape.mul(q, q)));

  auto fd = testutil::finite_diff(loss_of, tv);
  CHECK(testutil::grad_close(testutil::to_doubles(theta_gradient(tape, theta).data()), fd));
}

TEST_CASE("identical candidates give zero theta gradient") {
  Rng rng(10);
  std::vector<QuantConfig> cands(2, three_candidates()[0]);
  std::vector<float> xv = testutil::random_vector(8, rng);

  Tape tape;
  ValueId x = tape.leaf(Tensor::vector(xv), true);
  ValueId theta = tape.leaf(Tensor::vector({0.4f, -0.2f}), true);
  GumbelNoise noise = GumbelNoise::draw(2, rng);
  ValueId q = soft_quantize(tape, x, theta, noise, 1.0f, cands);
  tape.backward(tape.sum(q));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::fabs(tape.grad(theta).at(i)) < 1e-6);
  }
}

TEST_CASE("coarse-grained sharing sums gradients across sites") {
  Rng rng(11);
  auto cands = three_candidates();
  std::vector<float> xv = testutil::random_vector(12, rng);
  std::vector<float> tv = {0.3f, -0.1f, 0.2f};
  GumbelNoise noise = GumbelNoise::draw(3, rng);

  auto run = [&](int sites) {
    Tape tape;
    ValueId x = tape.leaf(Tensor::vector(xv), true);
    ValueId theta = tape.leaf(Tensor::vector(tv), true);
    ValueId total = 0;
    for (int s = 0; s < sites; ++s) {
      ValueId q = soft_quantize(tape, x, theta, noise, 1.0f, cands);
      total = s == 0 ? tape.sum(q) : tape.add(total, tape.sum(q));
    }
    tape.backward(total);
    return std::vector<float>(tape.grad(theta).data().begin(),
                              tape.grad(theta).data().end());
  };

  auto g1 = run(1);
  auto g2 = run(2);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g2[i] == doctest::Approx(2.0f * g1[i]).epsilon(1e-4));
  }
}

TEST_CASE("fine-grained sites are independent") {
  Rng rng(12);
  auto cands = three_candidates();
  std::vector<float> xv = testutil::random_vector(12, rng);
  GumbelNoise noise = GumbelNoise::draw(3, rng);

  auto grad_b = [&](float theta_a_first) {
    Tape tape;
    ValueId x = tape.leaf(Tensor::vector(xv), true);
    ValueId ta = tape.leaf(Tensor::vector({theta_a_first, 0.1f, -0.3f}), true);
    ValueId tb = tape.leaf(Tensor::vector({0.7f, -0.5f, 0.0f}), true);
    ValueId qa = soft_quantize(tape, x, ta, noise, 1.0f, cands);
    ValueId qb = soft_quantize(tape, x, tb, noise, 1.0f, cands);
    tape.backward(tape.add(tape.sum(qa), tape.sum(qb)));
    return std::vector<float>(tape.grad(tb).data().begin(), tape.grad(tb).data().end());
  };

  CHECK(grad_b(0.0f) == grad_b(5.0f));  // perturbing A leaves B's gradient unchanged
}

TEST_CASE("hard_select basics") {
  CHECK(hard_select({0, 5, 0}, nullptr) == 1);
  CHECK(hard_select({2, 2, 1}, nullptr) == 0);  // tie -> lowest index

  // argmax invariance under adding a constant
  Rng rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<float> theta = testutil::random_vector(5, rng);
    std::vector<float> shifted(theta);
    for (auto& v : shifted) v += 7.5f;
    CHECK(hard_select(theta, nullptr) == hard_select(shifted, nullptr));
  }
}

TEST_CASE("gumbel-max sampling frequencies follow softmax(theta)") {
  std::vector<float> theta = {0.0f, 0.693147f, 1.098612f};  // softmax = 1/6, 2/6, 3/6
  Rng rng(99);
  std::vector<std::size_t> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    GumbelNoise noise = GumbelNoise::draw(3, rng);
    counts[hard_select(theta, &noise)]++;
  }
  CHECK(std::fabs(counts[0] / double(n) - 1.0 / 6.0) < 0.02);
  CHECK(std::fabs(counts[1] / double(n) - 2.0 / 6.0) < 0.02);
  CHECK(std::fabs(counts[2] / double(n) - 0.5) < 0.02);

  // uniform theta: 1/n each
  std::vector<float> flat = {0.0f, 0.0f, 0.0f, 0.0f};
  std::vector<std::size_t> c2(4, 0);
  for (int i = 0; i < n; ++i) {
    GumbelNoise noise = GumbelNoise::draw(4, rng);
    c2[hard_select(flat, &noise)]++;
  }
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::fabs(c2[k] / double(n) - 0.25) < 0.02);
  }
}

TEST_CASE("soft output stays in the convex hull of candidate outputs") {
  Rng rng(14);
  auto cands = three_candidates();
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<float> xv = testutil::random_vector(10, rng);
    std::vector<float> tv = testutil::random_vector(3, rng);
    GumbelNoise noise = GumbelNoise::draw(3, rng);
    float tau = static_cast<float>(rng.uniform(0.05, 5.0));

    Tape tape;
    ValueId x = tape.leaf(Tensor::vector(xv));
    ValueId theta = tape.leaf(Tensor::vector(tv));
    ValueId out = soft_quantize(tape, x, theta, noise, tau, cands);

    std::vector<Tensor> qs;
    for (const auto& c : cands) qs.push_back(quant::quantize(Tensor::vector(xv), c).values);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      float lo = 1e30f, hi = -1e30f;
      for (const auto& q : qs) {
        lo = std::min(lo, q.at(i));
        hi = std::max(hi, q.at(i));
      }
      CHECK(tape.value(out).at(i) >= lo - 1e-5f);
      CHECK(tape.value(out).at(i) <= hi + 1e-5f);
    }
  }
}

TEST_CASE("entropy of p is non-increasing as tau decreases") {
  Rng rng(15);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<float> theta = testutil::random_vector(4, rng);
    GumbelNoise noise = GumbelNoise::draw(4, rng);
    double prev = 1e9;
    for (float tau : {8.0f, 4.0f, 2.0f, 1.0f, 0.5f, 0.25f, 0.1f}) {
      double h = entropy(soft_probs(theta, noise.g, tau));
      CHECK(h <= prev + 1e-9);
      prev = h;
    }
  }
}

TEST_CASE("search state construction") {
  CHECK_THROWS_AS(SchemeSearchState({three_candidates()[0]}), std::invalid_argument);
  SchemeSearchState st(three_candidates());
  CHECK(st.size() == 3);
  CHECK(st.theta.value.numel() == 3);

  // softmax of theta sums to one
  std::vector<float> p = selection_probabilities({0.5f, -1.0f, 2.0f});
  double sum = 0;
  for (float v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("default candidate sets follow the weight/activation split") {
  quant::AlphaTable alphas = quant::AlphaTable::builtin_defaults();
  auto w = default_weight_candidates(3, alphas);
  auto a = default_activation_candidates(3, alphas);
  CHECK(w.size() == 8);
  CHECK(a.size() == 5);
  for (const auto& c : a) {
    CHECK(c.scheme != SchemeId::Binary);
    CHECK(c.scheme != SchemeId::Ternary);
    CHECK(c.scheme != SchemeId::Quaternary);
  }
  // every candidate with a free bitwidth sits at the shared search bitwidth
  for (const auto& c : w) {
    if (quant::scheme_has_free_bits(c.scheme)) CHECK(c.b == 3.0f);
  }
  // fixed-width schemes keep their inherent widths
  CHECK(w[0].b == 1.0f);   // binary
  CHECK(w[1].b == 2.0f);   // ternary
}
