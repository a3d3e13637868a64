#pragma once

#include <memory>
#include <string>
#include <vector>

#include "arl/agents.hpp"
#include "arl/env.hpp"
#include "arl/mixer.hpp"
#include "arl/net.hpp"
#include "arl/rng.hpp"

namespace arl::ppo {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_eps = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.01;
  double learning_rate = 2.5e-4;
  int iterations = 100;
  int samples_per_iteration = 2048;  // T
  int epochs = 4;                    // K
  int minibatch_size = 256;
  bool normalize_advantages = true;
  int parallel_envs = 8;

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

// Supplies the (already temperature-scaled) base branch of the mixed policy.
class BaseLogitsProvider {
 public:
  virtual ~BaseLogitsProvider() = default;
  virtual std::vector<double> base_logits(const env::GameState& state,
                                          const env::Unit& unit) const = 0;
};

// One-hot(base agent action) / tau.
class AgentBaseLogits : public BaseLogitsProvider {
 public:
  AgentBaseLogits(std::shared_ptr<const env::AgentInterface> agent, double tau);
  std::vector<double> base_logits(const env::GameState& state,
                                  const env::Unit& unit) const override;

 private:
  std::shared_ptr<const env::AgentInterface> agent_;
  double tau_;
};

// All-zero base logits: the mixed policy degenerates to softmax(adj), i.e.
// PPO from scratch.
class UniformBaseLogits : public BaseLogitsProvider {
 public:
  std::vector<double> base_logits(const env::GameState&,
                                  const env::Unit&) const override {
    return std::vector<double>(env::kActionCount, 0.0);
  }
};

struct RolloutBatch {
  std::vector<std::vector<double>> observations;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<double> logp_old;
  std::vector<double> values_old;
  std::vector<std::vector<double>> base_logits;
  std::vector<env::ActionMask> masks;
  std::vector<double> advantages;
  std::vector<double> returns;

  // episode stats over episodes finished during collection
  int episodes = 0;
  int wins = 0;
  int draws = 0;
  int losses = 0;
  double episode_reward_sum = 0.0;
  long long base_action_matches = 0;  // sampled action == argmax(base logits)

  size_t size() const { return actions.size(); }
};

// delta_t = r_t + gamma*V(s_{t+1})*(1-d_t) - V(s_t);
// A_t = sum_l (gamma*lambda)^l delta_{t+l}, truncated at episode ends.
void compute_gae(std::span<const double> rewards,
                 std::span<const double> values,
                 std::span<const std::uint8_t> dones, double bootstrap_value,
                 double gamma, double lambda, std::vector<double>& advantages,
                 std::vector<double>& returns);

// Clipped surrogate, negated for descent.
double clip_objective(std::span<const double> logp_new,
                      std::span<const double> logp_old,
                      std::span<const double> advantages, double eps);

// In-place zero-mean unit-std normalization with a 1e-8 guard on the
// denominator. No-op for fewer than two samples.
void normalize_advantages(std::vector<double>& advantages);

// Mean squared error against the fixed GAE target v_old + A.
double value_objective(std::span<const double> v_pred,
                       std::span<const double> v_old,
                       std::span<const double> advantages);

// Owns the parallel environments and their RNG streams; episodes persist
// across collect() calls and auto-reset on termination.
class RolloutCollector {
 public:
  RolloutCollector(const env::MapSpec& map,
                   std::shared_ptr<const env::AgentInterface> opponent,
                   std::shared_ptr<const BaseLogitsProvider> base,
                   int num_envs, std::uint64_t seed,
                   env::EnvConfig env_cfg = {});

  // params acts as the frozen snapshot theta_old for the whole collection.
  RolloutBatch collect(const net::PolicyParameters& params, int total_steps,
                       double gamma, double lambda);

 private:
  struct Worker {
    std::unique_ptr<env::Env> env;
    Rng rng;
    std::uint64_t episodes_started = 0;
    double episode_reward = 0.0;
    Worker(std::unique_ptr<env::Env> e, std::uint64_t s)
        : env(std::move(e)), rng(s) {}
  };
  std::shared_ptr<const BaseLogitsProvider> base_;
  std::uint64_t seed_;
  std::vector<Worker> workers_;
};

struct LossSpec {
  double clip_eps = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.01;
};

struct LossResult {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
};

// Combined PPO loss over batch rows `idx`, with analytic gradients
// accumulated when grads are non-null. `advantages` replaces
// batch.advantages so callers can pass a normalized copy. The _parallel
// variant partitions idx into fixed-size blocks reduced in block order; its
// result does not depend on the thread count. The _serial variant is the
// reference path.
LossResult ppo_loss_serial(const net::PolicyParameters& params,
                           const RolloutBatch& batch,
                           std::span<const int> idx,
                           std::span<const double> advantages,
                           const LossSpec& spec, net::MlpGrad* policy_grad,
                           net::MlpGrad* value_grad);
LossResult ppo_loss_parallel(const net::PolicyParameters& params,
                             const RolloutBatch& batch,
                             std::span<const int> idx,
                             std::span<const double> advantages,
                             const LossSpec& spec, net::MlpGrad* policy_grad,
                             net::MlpGrad* value_grad);

struct IterationMetrics {
  int iteration = 0;
  long long total_steps = 0;
  double winrate = 0.0;  // wins + 0.5*draws over finished episodes
  double mean_episode_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
  double seconds = 0.0;
};

inline constexpr const char* kMetricsCsvHeader =
    "iteration,steps,winrate,mean_reward,policy_loss,value_loss,entropy,"
    "clip_frac,mean_ratio,seconds";

std::string metrics_csv_row(const IterationMetrics& m);

// K epochs of shuffled minibatch updates on `params` (in place). Advantage
// normalization is applied to a working copy of the batch when enabled.
IterationMetrics train_iteration(net::PolicyParameters& params,
                                 const RolloutBatch& batch,
                                 const PpoConfig& cfg, Rng& rng);

struct TrainOptions {
  env::MapSpec map;
  std::shared_ptr<const env::AgentInterface> opponent;
  std::shared_ptr<const BaseLogitsProvider> base;
  net::NetConfig net_config;  // input_dim filled from map when 0
  PpoConfig ppo;
  env::EnvConfig env_config;
  std::uint64_t seed = 0;
  std::string out_dir;           // metrics.csv + checkpoints written here
  int checkpoint_every = 10;
};

struct TrainResult {
  net::PolicyParameters params;
  std::vector<IterationMetrics> metrics;
  std::string checkpoint_path;
  std::string metrics_path;
};

// Full Algorithm-1 loop: N iterations of collect + update, CSV metrics,
// periodic checkpoints. Deterministic per (options, seed).
TrainResult train(const TrainOptions& options);

}  // namespace arl::ppo
