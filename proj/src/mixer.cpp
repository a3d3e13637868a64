#include "arl/mixer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace arl::mixer {

std::vector<double> onehot_temperature_logits(int action, int n, double tau) {
  if (n < 1) throw std::invalid_argument("action count must be >= 1");
  if (action < 0 || action >= n)
    throw std::invalid_argument("action index out of range");
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be > 0");
  std::vector<double> logits(n, 0.0);
  logits[action] = 1.0 / tau;
  return logits;
}

MixedDistribution combine_to_probabilities(std::span<const double> base_logits,
                                           std::span<const double> adj_logits,
                                           std::span<const bool> mask) {
  size_t n = base_logits.size();
  if (adj_logits.size() != n || mask.size() != n)
    throw std::invalid_argument("combine: length mismatch");

  MixedDistribution dist;
  dist.base_logits.assign(base_logits.begin(), base_logits.end());
  dist.adjustment_logits.assign(adj_logits.begin(), adj_logits.end());
  dist.probabilities.assign(n, 0.0);

  double max_logit = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    double z = base_logits[i] + adj_logits[i];
    if (!std::isfinite(z))
      throw std::invalid_argument("combine: non-finite logit");
    if (mask[i] && z > max_logit) max_logit = z;
  }
  if (!std::isfinite(max_logit))
    throw std::invalid_argument("combine: all actions masked");

  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    double e = std::exp(base_logits[i] + adj_logits[i] - max_logit);
    dist.probabilities[i] = e;
    sum += e;
  }
  for (size_t i = 0; i < n; ++i) dist.probabilities[i] /= sum;
  return dist;
}

Sample sample_categorical(const MixedDistribution& dist, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  size_t n = dist.probabilities.size();
  size_t chosen = n;
  for (size_t i = 0; i < n; ++i) {
    acc += dist.probabilities[i];
    if (u < acc) {
      chosen = i;
      break;
    }
  }
  if (chosen == n) {
    // u landed in the rounding tail; take the last positive entry
    for (size_t i = n; i-- > 0;) {
      if (dist.probabilities[i] > 0.0) {
        chosen = i;
        break;
      }
    }
  }
  return {static_cast<int>(chosen), std::log(dist.probabilities[chosen])};
}

double entropy(const MixedDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probabilities)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

ContinuousSample continuous_combine(double a_base, double a_adj_shift,
                                    double tau, Rng& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be > 0");
  double z = rng.normal();
  double pre_shift = a_base + tau * z;
  double log_density = -0.5 * z * z - std::log(tau) -
                       0.5 * std::log(6.283185307179586);
  return {pre_shift + a_adj_shift, log_density};
}

}  // namespace arl::mixer
