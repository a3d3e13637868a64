#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "arl/mixer.hpp"
#include "arl/rng.hpp"

using namespace arl;

namespace {

std::vector<bool> all_legal(int n) { return std::vector<bool>(n, true); }

// std::vector<bool> has no contiguous data(); repack before the span call.
mixer::MixedDistribution combine(const std::vector<double>& base,
                                 const std::vector<double>& adj,
                                 const std::vector<bool>& mask) {
  std::unique_ptr<bool[]> m(new bool[mask.size()]);
  for (size_t i = 0; i < mask.size(); ++i) m[i] = mask[i];
  return mixer::combine_to_probabilities(
      base, adj, std::span<const bool>(m.get(), mask.size()));
}

}  // namespace

TEST_CASE("one-hot temperature logits") {
  auto v = mixer::onehot_temperature_logits(2, 5, 0.5);
  CHECK(v.size() == 5);
  CHECK(v[2] == doctest::Approx(2.0).epsilon(1e-15));
  for (int i : {0, 1, 3, 4}) CHECK(v[i] == 0.0);

  auto w = mixer::onehot_temperature_logits(0, 3, 0.01);
  CHECK(w[0] == doctest::Approx(100.0).epsilon(1e-15));
}

TEST_CASE("mixed probability closed form: p_base = e/(e+n-1)") {
  // tau = 1, base one-hot at index 1, zero adjustments, 5 actions:
  // p_1 = e / (e + 4), others = 1 / (e + 4).
  const int n = 5;
  auto base = mixer::onehot_temperature_logits(1, n, 1.0);
  std::vector<double> adj(n, 0.0);
  auto dist = combine(base, adj, all_legal(n));
  const double e = std::exp(1.0);
  CHECK(dist.probabilities[1] == doctest::Approx(e / (e + 4.0)).epsilon(1e-12));
  for (int i : {0, 2, 3, 4})
    CHECK(dist.probabilities[i] ==
          doctest::Approx(1.0 / (e + 4.0)).epsilon(1e-12));
}

TEST_CASE("probabilities normalize and masked entries are exactly zero") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + static_cast<int>(rng.uniform() * 28);
    double tau = std::pow(10.0, -4.0 + 8.0 * rng.uniform());
    int base_action = static_cast<int>(rng.uniform() * n);
    auto base = mixer::onehot_temperature_logits(base_action, n, tau);
    std::vector<double> adj(n);
    for (auto& a : adj) a = 10.0 * (rng.uniform() - 0.5);
    std::vector<bool> mask(n, false);
    for (int i = 0; i < n; ++i) mask[i] = rng.uniform() < 0.7;
    mask[base_action] = true;  // keep at least one legal entry
    auto dist = combine(base, adj, mask);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(std::isfinite(dist.probabilities[i]));
      CHECK(dist.probabilities[i] >= 0.0);
      if (!mask[i]) CHECK(dist.probabilities[i] == 0.0);
      sum += dist.probabilities[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("shift invariance of the softmax") {
  Rng rng(11);
  const int n = 29;
  auto base = mixer::onehot_temperature_logits(3, n, 0.5);
  std::vector<double> adj(n);
  for (auto& a : adj) a = 4.0 * (rng.uniform() - 0.5);
  auto d1 = combine(base, adj, all_legal(n));
  for (auto& a : adj) a += 123.456;
  auto d2 = combine(base, adj, all_legal(n));
  for (int i = 0; i < n; ++i)
    CHECK(d1.probabilities[i] ==
          doctest::Approx(d2.probabilities[i]).epsilon(1e-12));
}

TEST_CASE("low temperature concentrates on the base action") {
  const int n = 29;
  Rng rng(3);
  std::vector<double> adj(n);
  for (auto& a : adj) a = 2.0 * (rng.uniform() - 0.5);  // bounded adjustments
  auto base = mixer::onehot_temperature_logits(17, n, 1e-3);
  auto dist = combine(base, adj, all_legal(n));
  CHECK(dist.probabilities[17] > 0.999);
}

TEST_CASE("high temperature recovers softmax of the adjustments alone") {
  const int n = 7;
  Rng rng(5);
  std::vector<double> adj(n);
  for (auto& a : adj) a = 3.0 * (rng.uniform() - 0.5);
  auto base = mixer::onehot_temperature_logits(2, n, 1e9);
  auto dist = combine(base, adj, all_legal(n));

  double mx = *std::max_element(adj.begin(), adj.end());
  double z = 0.0;
  for (double a : adj) z += std::exp(a - mx);
  for (int i = 0; i < n; ++i)
    CHECK(dist.probabilities[i] ==
          doctest::Approx(std::exp(adj[i] - mx) / z).epsilon(1e-9));
}

TEST_CASE("base-action probability is monotone decreasing in tau") {
  const int n = 29;
  std::vector<double> adj(n, 0.0);
  adj[5] = 1.5;  // competing preference away from the base action
  double prev = 1.1;
  for (double tau : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    auto base = mixer::onehot_temperature_logits(8, n, tau);
    auto dist = combine(base, adj, all_legal(n));
    CHECK(dist.probabilities[8] < prev);
    prev = dist.probabilities[8];
  }
}

TEST_CASE("entropy matches the definition and its bounds") {
  const int n = 4;
  auto base = mixer::onehot_temperature_logits(0, n, 1e9);  // ~uniform
  std::vector<double> adj(n, 0.0);
  auto dist = combine(base, adj, all_legal(n));
  CHECK(mixer::entropy(dist) == doctest::Approx(std::log(4.0)).epsilon(1e-6));

  // near-deterministic: entropy near 0
  auto base2 = mixer::onehot_temperature_logits(1, n, 1e-3);
  auto d2 = combine(base2, adj, all_legal(n));
  CHECK(mixer::entropy(d2) < 1e-2);
  CHECK(mixer::entropy(d2) >= 0.0);
}

TEST_CASE("categorical sampling: degenerate, reproducible, frequencies") {
  const int n = 4;
  std::vector<double> adj(n, 0.0);

  SUBCASE("degenerate distribution always returns its atom") {
    auto base = mixer::onehot_temperature_logits(2, n, 1e-6);
    auto dist = combine(base, adj, all_legal(n));
    Rng rng(0);
    for (int i = 0; i < 100; ++i) {
      auto s = mixer::sample_categorical(dist, rng);
      CHECK(s.action == 2);
      CHECK(s.log_prob == doctest::Approx(std::log(dist.probabilities[2]))
                              .epsilon(1e-12));
    }
  }

  SUBCASE("same rng stream reproduces the same samples") {
    auto base = mixer::onehot_temperature_logits(0, n, 1.0);
    auto dist = combine(base, adj, all_legal(n));
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i)
      CHECK(mixer::sample_categorical(dist, a).action ==
            mixer::sample_categorical(dist, b).action);
  }

  SUBCASE("empirical frequencies track probabilities") {
    auto base = mixer::onehot_temperature_logits(1, n, 1.0);
    auto dist = combine(base, adj, all_legal(n));
    Rng rng(9);
    const int trials = 200000;
    std::array<int, 4> counts = {0, 0, 0, 0};
    for (int i = 0; i < trials; ++i)
      counts[mixer::sample_categorical(dist, rng).action]++;
    for (int i = 0; i < n; ++i) {
      double p = dist.probabilities[i];
      double freq = static_cast<double>(counts[i]) / trials;
      double stderr_bound = 5.0 * std::sqrt(p * (1 - p) / trials);
      CHECK(std::abs(freq - p) < stderr_bound);
    }
  }
}

TEST_CASE("continuous variant: shift and reproducibility") {
  SUBCASE("tiny tau collapses to base + shift") {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
      auto s = mixer::continuous_combine(2.0, 0.75, 1e-9, rng);
      CHECK(s.action == doctest::Approx(2.75).epsilon(1e-6));
    }
  }
  SUBCASE("sample mean approaches base + shift") {
    Rng rng(2);
    double sum = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i)
      sum += mixer::continuous_combine(-1.0, 0.5, 0.3, rng).action;
    CHECK(sum / trials == doctest::Approx(-0.5).epsilon(0.02));
  }
  SUBCASE("identical streams give identical samples") {
    Rng a(3), b(3);
    for (int i = 0; i < 100; ++i) {
      auto sa = mixer::continuous_combine(0.0, 0.1, 1.0, a);
      auto sb = mixer::continuous_combine(0.0, 0.1, 1.0, b);
      CHECK(sa.action == sb.action);
      CHECK(sa.log_density == sb.log_density);
    }
  }
  SUBCASE("log density matches the Gaussian formula") {
    Rng rng(4);
    const double tau = 0.7, base = 1.2;
    auto s = mixer::continuous_combine(base, 0.3, tau, rng);
    double z = s.action - 0.3;  // pre-shift sample
    double expect = -0.5 * std::log(2.0 * M_PI * tau * tau) -
                    (z - base) * (z - base) / (2.0 * tau * tau);
    CHECK(s.log_density == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("error handling") {
  const int n = 3;
  std::vector<double> adj(n, 0.0);
  SUBCASE("non-positive temperature is rejected") {
    CHECK_THROWS(mixer::onehot_temperature_logits(0, n, 0.0));
    CHECK_THROWS(mixer::onehot_temperature_logits(0, n, -1.0));
  }
  SUBCASE("out-of-range base action is rejected") {
    CHECK_THROWS(mixer::onehot_temperature_logits(3, n, 1.0));
    CHECK_THROWS(mixer::onehot_temperature_logits(-1, n, 1.0));
  }
  SUBCASE("fully masked action set is rejected") {
    auto base = mixer::onehot_temperature_logits(0, n, 1.0);
    bool mask[3] = {false, false, false};
    CHECK_THROWS(mixer::combine_to_probabilities(
        base, adj, std::span<const bool>(mask, 3)));
  }
}
