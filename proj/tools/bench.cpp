#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "arl/net.hpp"
#include "arl/ppo.hpp"
#include "arl/rng.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

// Times the OpenMP batch kernels against their serial reference paths.
int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled\n");
#endif

  arl::net::NetConfig cfg;
  cfg.input_dim = 707;
  cfg.hidden_sizes = {64, 64};
  arl::net::PolicyParameters params = arl::net::init_params(cfg, 7);
  arl::Rng rng(11);

  const int batch = 2048;
  std::vector<std::vector<double>> obs(batch,
                                       std::vector<double>(cfg.input_dim));
  for (auto& o : obs)
    for (double& v : o) v = rng.uniform();

  std::vector<std::vector<double>> logits;
  std::vector<double> values;
  const int reps = 5;

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    arl::net::forward_batch_serial(params, obs, logits, values);
  double serial_fwd = seconds_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    arl::net::forward_batch_parallel(params, obs, logits, values);
  double parallel_fwd = seconds_since(t0) / reps;

  // synthetic PPO batch for the loss+gradient kernel
  arl::ppo::RolloutBatch rb;
  for (int i = 0; i < batch; ++i) {
    rb.observations.push_back(obs[i]);
    std::vector<double> base(29, 0.0);
    base[i % 29] = 100.0;
    rb.base_logits.push_back(base);
    arl::env::ActionMask mask{};
    for (int j = 0; j < 29; ++j) mask[j] = true;
    rb.masks.push_back(mask);
    rb.actions.push_back(i % 29);
    rb.logp_old.push_back(-0.01);
    rb.values_old.push_back(0.0);
    rb.advantages.push_back(rng.normal());
    rb.returns.push_back(rng.normal());
    rb.rewards.push_back(0.0);
    rb.dones.push_back(0);
  }
  std::vector<int> idx(batch);
  for (int i = 0; i < batch; ++i) idx[i] = i;
  arl::ppo::LossSpec spec;

  auto pg = arl::net::zero_grad_like(params.policy);
  auto vg = arl::net::zero_grad_like(params.value);
  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    arl::ppo::ppo_loss_serial(params, rb, idx, rb.advantages, spec, &pg, &vg);
  double serial_loss = seconds_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    arl::ppo::ppo_loss_parallel(params, rb, idx, rb.advantages, spec, &pg,
                                &vg);
  double parallel_loss = seconds_since(t0) / reps;

  std::printf("%-28s %10s %10s %8s\n", "kernel (batch 2048)", "serial",
              "parallel", "speedup");
  std::printf("%-28s %9.4fs %9.4fs %7.2fx\n", "forward_batch", serial_fwd,
              parallel_fwd, serial_fwd / parallel_fwd);
  std::printf("%-28s %9.4fs %9.4fs %7.2fx\n", "ppo_loss_grad", serial_loss,
              parallel_loss, serial_loss / parallel_loss);
  return 0;
}
