#pragma once

#include <span>
#include <vector>

#include "arl/rng.hpp"

namespace arl::mixer {

struct MixerConfig {
  double temperature = 0.01;  // tau > 0
  int action_count = 29;
};

struct MixedDistribution {
  std::vector<double> base_logits;        // already temperature-scaled
  std::vector<double> adjustment_logits;
  std::vector<double> probabilities;      // masked entries exactly 0
};

// One-hot at `action` scaled by 1/tau.
std::vector<double> onehot_temperature_logits(int action, int n, double tau);

// Softmax over base + adjustment logits with masked (illegal) entries
// excluded from the normalization. Max-subtraction for stability.
MixedDistribution combine_to_probabilities(std::span<const double> base_logits,
                                           std::span<const double> adj_logits,
                                           std::span<const bool> mask);

struct Sample {
  int action = 0;
  double log_prob = 0.0;  // log of the mixed distribution at `action`
};

// Inverse-CDF sampling in index order.
Sample sample_categorical(const MixedDistribution& dist, Rng& rng);

double entropy(const MixedDistribution& dist);

struct ContinuousSample {
  double action = 0.0;
  double log_density = 0.0;  // Gaussian log-density of the pre-shift sample
};

// Continuous variant: sample from Normal(a_base, tau), shifted by
// a_adj_shift. Library-only here; the environment is discrete.
ContinuousSample continuous_combine(double a_base, double a_adj_shift,
                                    double tau, Rng& rng);

}  // namespace arl::mixer
