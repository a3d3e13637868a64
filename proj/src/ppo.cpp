#include "arl/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace arl::ppo {

using env::GameState;
using env::Terminal;
using env::Unit;
using net::MlpGrad;
using net::PolicyParameters;

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma must be in (0, 1]");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw std::invalid_argument("lambda must be in (0, 1]");
  if (!(clip_eps > 0.0)) throw std::invalid_argument("clip_eps must be > 0");
  if (entropy_coef < 0.0)
    throw std::invalid_argument("entropy_coef must be >= 0");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("learning_rate must be > 0");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (samples_per_iteration < 1)
    throw std::invalid_argument("samples_per_iteration must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (minibatch_size < 1 ||
      samples_per_iteration % minibatch_size != 0)
    throw std::invalid_argument(
        "samples_per_iteration must be divisible by minibatch_size");
  if (parallel_envs < 1 || samples_per_iteration % parallel_envs != 0)
    throw std::invalid_argument(
        "samples_per_iteration must be divisible by parallel_envs");
}

AgentBaseLogits::AgentBaseLogits(
    std::shared_ptr<const env::AgentInterface> agent, double tau)
    : agent_(std::move(agent)), tau_(tau) {
  if (!agent_) throw std::invalid_argument("base agent required");
  if (!(tau_ > 0.0)) throw std::invalid_argument("temperature must be > 0");
}

std::vector<double> AgentBaseLogits::base_logits(const GameState& state,
                                                 const Unit& unit) const {
  env::Action a = agent_->act(state, unit);
  return mixer::onehot_temperature_logits(a.index, env::kActionCount, tau_);
}

void compute_gae(std::span<const double> rewards,
                 std::span<const double> values,
                 std::span<const std::uint8_t> dones, double bootstrap_value,
                 double gamma, double lambda, std::vector<double>& advantages,
                 std::vector<double>& returns) {
  size_t n = rewards.size();
  if (values.size() != n || dones.size() != n)
    throw std::invalid_argument("compute_gae: length mismatch");
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double gae = 0.0;
  for (size_t t = n; t-- > 0;) {
    double next_value = t + 1 < n ? values[t + 1] : bootstrap_value;
    double not_done = dones[t] ? 0.0 : 1.0;
    double delta = rewards[t] + gamma * next_value * not_done - values[t];
    gae = delta + gamma * lambda * not_done * gae;
    advantages[t] = gae;
    returns[t] = values[t] + gae;
  }
}

double clip_objective(std::span<const double> logp_new,
                      std::span<const double> logp_old,
                      std::span<const double> advantages, double eps) {
  size_t n = logp_new.size();
  if (logp_old.size() != n || advantages.size() != n)
    throw std::invalid_argument("clip_objective: length mismatch");
  double sum = 0.0;
  for (size_t t = 0; t < n; ++t) {
    double ratio = std::exp(logp_new[t] - logp_old[t]);
    if (!std::isfinite(ratio))
      throw std::runtime_error("clip_objective: non-finite ratio");
    double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    sum += std::min(ratio * advantages[t], clipped * advantages[t]);
  }
  return -sum / static_cast<double>(n);
}

double value_objective(std::span<const double> v_pred,
                       std::span<const double> v_old,
                       std::span<const double> advantages) {
  size_t n = v_pred.size();
  if (v_old.size() != n || advantages.size() != n)
    throw std::invalid_argument("value_objective: length mismatch");
  double sum = 0.0;
  for (size_t t = 0; t < n; ++t) {
    double residual = v_pred[t] - (v_old[t] + advantages[t]);
    sum += residual * residual;
  }
  return sum / static_cast<double>(n);
}

RolloutCollector::RolloutCollector(
    const env::MapSpec& map,
    std::shared_ptr<const env::AgentInterface> opponent,
    std::shared_ptr<const BaseLogitsProvider> base, int num_envs,
    std::uint64_t seed, env::EnvConfig env_cfg)
    : base_(std::move(base)), seed_(seed) {
  if (!base_) throw std::invalid_argument("base logits provider required");
  if (num_envs < 1) throw std::invalid_argument("need at least one env");
  for (int w = 0; w < num_envs; ++w) {
    auto e = std::make_unique<env::Env>(map, opponent, env_cfg);
    workers_.emplace_back(std::move(e),
                          Rng::derive(seed, 0x100000 + w));
    Worker& worker = workers_.back();
    worker.env->reset(Rng::derive(Rng::derive(seed, w), 0), 0);
    worker.episodes_started = 1;
  }
}

RolloutBatch RolloutCollector::collect(const PolicyParameters& params,
                                       int total_steps, double gamma,
                                       double lambda) {
  int num_envs = static_cast<int>(workers_.size());
  if (total_steps % num_envs != 0)
    throw std::invalid_argument("total_steps must be divisible by env count");
  int per_env = total_steps / num_envs;

  RolloutBatch batch;
  batch.observations.resize(total_steps);
  batch.actions.resize(total_steps);
  batch.rewards.resize(total_steps);
  batch.dones.resize(total_steps);
  batch.logp_old.resize(total_steps);
  batch.values_old.resize(total_steps);
  batch.base_logits.resize(total_steps);
  batch.masks.resize(total_steps);
  batch.advantages.resize(total_steps);
  batch.returns.resize(total_steps);

  for (int w = 0; w < num_envs; ++w) {
    Worker& worker = workers_[w];
    int offset = w * per_env;
    for (int t = 0; t < per_env; ++t) {
      int row = offset + t;
      const GameState& s = worker.env->state();
      const Unit& unit = s.active_unit();
      env::ActionMask mask = env::legal_actions(s, unit);
      std::vector<double> base = base_->base_logits(s, unit);
      env::Observation obs = env::encode_observation(s, s.learner);
      net::ForwardResult fwd = net::forward(params, obs);
      mixer::MixedDistribution dist =
          mixer::combine_to_probabilities(base, fwd.adj_logits, mask);
      mixer::Sample sample = mixer::sample_categorical(dist, worker.rng);

      int base_argmax = 0;
      for (int i = 1; i < env::kActionCount; ++i)
        if (base[i] > base[base_argmax]) base_argmax = i;
      if (sample.action == base_argmax) ++batch.base_action_matches;

      env::StepResult sr = worker.env->step(env::Action{sample.action});
      worker.episode_reward += sr.reward;

      batch.observations[row] = std::move(obs);
      batch.actions[row] = sample.action;
      batch.rewards[row] = sr.reward;
      batch.dones[row] = sr.done ? 1 : 0;
      batch.logp_old[row] = sample.log_prob;
      batch.values_old[row] = fwd.value;
      batch.base_logits[row] = std::move(base);
      batch.masks[row] = mask;

      if (sr.done) {
        ++batch.episodes;
        batch.episode_reward_sum += worker.episode_reward;
        worker.episode_reward = 0.0;
        if (sr.terminal == Terminal::Draw) ++batch.draws;
        else if (sr.terminal == Terminal::P0Win) ++batch.wins;
        else ++batch.losses;
        worker.env->reset(
            Rng::derive(Rng::derive(seed_, w), worker.episodes_started), 0);
        ++worker.episodes_started;
      }
    }

    double bootstrap = 0.0;
    if (!batch.dones[offset + per_env - 1]) {
      env::Observation next_obs =
          env::encode_observation(worker.env->state(),
                                  worker.env->state().learner);
      bootstrap = net::mlp_forward(params.value, next_obs)[0];
    }
    std::vector<double> adv, ret;
    compute_gae(
        std::span(batch.rewards).subspan(offset, per_env),
        std::span(batch.values_old).subspan(offset, per_env),
        std::span(batch.dones).subspan(offset, per_env), bootstrap, gamma,
        lambda, adv, ret);
    std::copy(adv.begin(), adv.end(), batch.advantages.begin() + offset);
    std::copy(ret.begin(), ret.end(), batch.returns.begin() + offset);
  }
  return batch;
}

namespace {

struct SampleStats {
  double policy_sum = 0.0;
  double value_sum = 0.0;
  double entropy_sum = 0.0;
  double ratio_sum = 0.0;
  double ratio_max = 0.0;
  int clipped = 0;
};

// Loss and gradient contribution of one batch row; all terms carry the 1/n
// minibatch-mean factor via `inv_n`.
void accumulate_sample(const PolicyParameters& params,
                       const RolloutBatch& batch,
                       std::span<const double> advantages, int row,
                       const LossSpec& spec, double inv_n, SampleStats& stats,
                       MlpGrad* policy_grad, MlpGrad* value_grad) {
  net::MlpCache policy_cache, value_cache;
  std::vector<double> adj =
      net::mlp_forward(params.policy, batch.observations[row],
                       policy_grad ? &policy_cache : nullptr);
  double v = net::mlp_forward(params.value, batch.observations[row],
                              value_grad ? &value_cache : nullptr)[0];

  mixer::MixedDistribution dist = mixer::combine_to_probabilities(
      batch.base_logits[row], adj, batch.masks[row]);
  int a = batch.actions[row];
  double logp_new = std::log(dist.probabilities[a]);
  double adv = advantages[row];

  double ratio = std::exp(logp_new - batch.logp_old[row]);
  if (!std::isfinite(ratio))
    throw std::runtime_error("ppo_loss: non-finite probability ratio");
  double clipped_ratio = std::clamp(ratio, 1.0 - spec.clip_eps,
                                    1.0 + spec.clip_eps);
  double surr_unclipped = ratio * adv;
  double surr_clipped = clipped_ratio * adv;
  bool use_unclipped = surr_unclipped <= surr_clipped;

  double h = mixer::entropy(dist);
  double target = batch.values_old[row] + batch.advantages[row];
  double residual = v - target;

  stats.policy_sum += -std::min(surr_unclipped, surr_clipped);
  stats.value_sum += residual * residual;
  stats.entropy_sum += h;
  stats.ratio_sum += ratio;
  stats.ratio_max = std::max(stats.ratio_max, ratio);
  if (!use_unclipped) ++stats.clipped;

  if (policy_grad) {
    // d(total)/d(logp_new): surrogate flows only on the unclipped branch
    double d_logp = use_unclipped ? -inv_n * ratio * adv : 0.0;
    std::vector<double> d_adj(adj.size(), 0.0);
    for (size_t j = 0; j < adj.size(); ++j) {
      double p = dist.probabilities[j];
      if (p <= 0.0) continue;
      double indicator = static_cast<int>(j) == a ? 1.0 : 0.0;
      d_adj[j] = d_logp * (indicator - p);
      // -c_e * mean entropy term
      d_adj[j] += spec.entropy_coef * inv_n * p * (std::log(p) + h);
    }
    net::mlp_backward(params.policy, policy_cache, d_adj, *policy_grad);
  }
  if (value_grad) {
    std::vector<double> d_v = {spec.value_coef * inv_n * 2.0 * residual};
    net::mlp_backward(params.value, value_cache, d_v, *value_grad);
  }
}

LossResult finalize(const SampleStats& stats, const LossSpec& spec, size_t n) {
  LossResult r;
  double inv_n = 1.0 / static_cast<double>(n);
  r.policy_loss = stats.policy_sum * inv_n;
  r.value_loss = stats.value_sum * inv_n;
  r.entropy = stats.entropy_sum * inv_n;
  r.total = r.policy_loss + spec.value_coef * r.value_loss -
            spec.entropy_coef * r.entropy;
  r.clip_fraction = static_cast<double>(stats.clipped) * inv_n;
  r.mean_ratio = stats.ratio_sum * inv_n;
  r.max_ratio = stats.ratio_max;
  return r;
}

}  // namespace

LossResult ppo_loss_serial(const PolicyParameters& params,
                           const RolloutBatch& batch,
                           std::span<const int> idx,
                           std::span<const double> advantages,
                           const LossSpec& spec, MlpGrad* policy_grad,
                           MlpGrad* value_grad) {
  SampleStats stats;
  double inv_n = 1.0 / static_cast<double>(idx.size());
  for (int row : idx)
    accumulate_sample(params, batch, advantages, row, spec, inv_n, stats,
                      policy_grad, value_grad);
  return finalize(stats, spec, idx.size());
}

LossResult ppo_loss_parallel(const PolicyParameters& params,
                             const RolloutBatch& batch,
                             std::span<const int> idx,
                             std::span<const double> advantages,
                             const LossSpec& spec, MlpGrad* policy_grad,
                             MlpGrad* value_grad) {
  constexpr int kBlock = 32;
  int n = static_cast<int>(idx.size());
  int blocks = (n + kBlock - 1) / kBlock;
  double inv_n = 1.0 / static_cast<double>(n);

  std::vector<SampleStats> block_stats(blocks);
  std::vector<MlpGrad> block_policy(policy_grad ? blocks : 0);
  std::vector<MlpGrad> block_value(value_grad ? blocks : 0);

#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    MlpGrad* pg = nullptr;
    MlpGrad* vg = nullptr;
    if (policy_grad) {
      block_policy[b] = net::zero_grad_like(params.policy);
      pg = &block_policy[b];
    }
    if (value_grad) {
      block_value[b] = net::zero_grad_like(params.value);
      vg = &block_value[b];
    }
    int lo = b * kBlock;
    int hi = std::min(n, lo + kBlock);
    for (int i = lo; i < hi; ++i)
      accumulate_sample(params, batch, advantages, idx[i], spec, inv_n,
                        block_stats[b], pg, vg);
  }

  // fixed block order keeps the reduction independent of the thread count
  SampleStats stats;
  for (int b = 0; b < blocks; ++b) {
    stats.policy_sum += block_stats[b].policy_sum;
    stats.value_sum += block_stats[b].value_sum;
    stats.entropy_sum += block_stats[b].entropy_sum;
    stats.ratio_sum += block_stats[b].ratio_sum;
    stats.ratio_max = std::max(stats.ratio_max, block_stats[b].ratio_max);
    stats.clipped += block_stats[b].clipped;
    if (policy_grad) net::accumulate(*policy_grad, block_policy[b]);
    if (value_grad) net::accumulate(*value_grad, block_value[b]);
  }
  return finalize(stats, spec, idx.size());
}

std::string metrics_csv_row(const IterationMetrics& m) {
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "%d,%lld,%.6f,%.6f,%.8g,%.8g,%.8g,%.6f,%.8g,%.3f",
                m.iteration, m.total_steps, m.winrate, m.mean_episode_reward,
                m.policy_loss, m.value_loss, m.entropy, m.clip_fraction,
                m.mean_ratio, m.seconds);
  return std::string(buf);
}

void normalize_advantages(std::vector<double>& advantages) {
  size_t n = advantages.size();
  if (n < 2) return;
  double mean =
      std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  double std_dev = std::sqrt(var / n);
  for (double& a : advantages) a = (a - mean) / (std_dev + 1e-8);
}

IterationMetrics train_iteration(PolicyParameters& params,
                                 const RolloutBatch& batch,
                                 const PpoConfig& cfg, Rng& rng) {
  int n = static_cast<int>(batch.size());
  std::vector<double> advantages = batch.advantages;
  if (cfg.normalize_advantages) normalize_advantages(advantages);

  LossSpec spec{cfg.clip_eps, cfg.value_coef, cfg.entropy_coef};
  net::AdamHyper adam;
  adam.lr = cfg.learning_rate;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  IterationMetrics m;
  int minibatches = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
    for (int start = 0; start < n; start += cfg.minibatch_size) {
      int len = std::min(cfg.minibatch_size, n - start);
      MlpGrad policy_grad = net::zero_grad_like(params.policy);
      MlpGrad value_grad = net::zero_grad_like(params.value);
      LossResult loss = ppo_loss_parallel(
          params, batch, std::span(order).subspan(start, len),
          advantages, spec, &policy_grad, &value_grad);
      if (!std::isfinite(loss.total))
        throw std::runtime_error("ppo: non-finite loss, aborting");
      net::adam_step(params, policy_grad, value_grad, adam);

      m.policy_loss += loss.policy_loss;
      m.value_loss += loss.value_loss;
      m.entropy += loss.entropy;
      m.clip_fraction += loss.clip_fraction;
      m.mean_ratio += loss.mean_ratio;
      m.max_ratio = std::max(m.max_ratio, loss.max_ratio);
      ++minibatches;
    }
  }
  m.policy_loss /= minibatches;
  m.value_loss /= minibatches;
  m.entropy /= minibatches;
  m.clip_fraction /= minibatches;
  m.mean_ratio /= minibatches;

  if (batch.episodes > 0) {
    m.winrate = (batch.wins + 0.5 * batch.draws) / batch.episodes;
    m.mean_episode_reward = batch.episode_reward_sum / batch.episodes;
  }
  return m;
}

TrainResult train(const TrainOptions& options) {
  options.ppo.validate();
  net::NetConfig net_cfg = options.net_config;
  if (net_cfg.input_dim == 0)
    net_cfg.input_dim = env::observation_size(options.map);

  std::filesystem::create_directories(options.out_dir);
  std::string metrics_path = options.out_dir + "/metrics.csv";
  std::ofstream csv(metrics_path);
  if (!csv) throw std::runtime_error("cannot write " + metrics_path);
  csv << kMetricsCsvHeader << "\n";

  TrainResult result;
  result.metrics_path = metrics_path;
  result.params = net::init_params(net_cfg, options.seed);
  RolloutCollector collector(options.map, options.opponent, options.base,
                             options.ppo.parallel_envs, options.seed,
                             options.env_config);
  Rng train_rng(Rng::derive(options.seed, 0xACC));

  auto write_checkpoint = [&](int iteration, const std::string& name) {
    net::CheckpointMeta meta;
    meta.iteration = iteration;
    meta.seed = options.seed;
    meta.map_name = options.map.name;
    std::string path = options.out_dir + "/" + name;
    net::save_checkpoint(result.params, meta, path);
    return path;
  };

  for (int it = 0; it < options.ppo.iterations; ++it) {
    auto t0 = std::chrono::steady_clock::now();
    RolloutBatch batch =
        collector.collect(result.params, options.ppo.samples_per_iteration,
                          options.ppo.gamma, options.ppo.lambda);
    IterationMetrics m =
        train_iteration(result.params, batch, options.ppo, train_rng);
    m.iteration = it;
    m.total_steps = static_cast<long long>(it + 1) *
                    options.ppo.samples_per_iteration;
    m.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    csv << metrics_csv_row(m) << "\n";
    csv.flush();
    result.metrics.push_back(m);
    if (options.checkpoint_every > 0 &&
        (it + 1) % options.checkpoint_every == 0)
      write_checkpoint(it, "checkpoint_iter" + std::to_string(it) + ".ckpt");
  }
  result.checkpoint_path =
      write_checkpoint(options.ppo.iterations - 1, "final.ckpt");
  return result;
}

}  // namespace arl::ppo
