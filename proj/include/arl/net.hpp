#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arl/rng.hpp"

namespace arl::net {

enum class Activation { Tanh, Relu };

struct NetConfig {
  int input_dim = 0;
  std::vector<int> hidden_sizes = {512, 512, 512};
  Activation activation = Activation::Tanh;
  int policy_outputs = 29;
  int value_outputs = 1;
  bool shared_trunk = false;  // two separate networks

  bool operator==(const NetConfig&) const = default;
};

// One fully connected network; weight matrices are row-major [out][in].
struct Mlp {
  std::vector<int> sizes;  // input, hidden..., output
  Activation activation = Activation::Tanh;
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  int layer_count() const { return static_cast<int>(w.size()); }
};

// Cached activations of one forward pass, consumed by backward().
struct MlpCache {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // pre-activation per layer
  std::vector<std::vector<double>> post;  // post-activation per layer
};

struct MlpGrad {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;
};

MlpGrad zero_grad_like(const Mlp& net);
void accumulate(MlpGrad& into, const MlpGrad& from);
void scale(MlpGrad& g, double factor);

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x,
                                MlpCache* cache = nullptr);

// Backpropagates d(loss)/d(output) through the cached pass, accumulating
// parameter gradients into `grad`.
void mlp_backward(const Mlp& net, const MlpCache& cache,
                  std::span<const double> d_out, MlpGrad& grad);

struct AdamState {
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
};

AdamState zero_adam_like(const Mlp& net);

struct PolicyParameters {
  NetConfig config;
  Mlp policy;
  Mlp value;
  AdamState adam_policy;
  AdamState adam_value;
  std::int64_t step = 0;  // shared Adam step counter
};

// Orthogonal init, gain sqrt(2) on hidden layers, 0.01 on the policy output
// layer, 1.0 on the value output layer. Deterministic per seed.
PolicyParameters init_params(const NetConfig& config, std::uint64_t seed);

struct ForwardResult {
  std::vector<double> adj_logits;
  double value = 0.0;
};

ForwardResult forward(const PolicyParameters& params,
                      std::span<const double> observation);

// Batched policy+value forward. The _parallel variant partitions the batch
// into fixed blocks and is bitwise identical to _serial (per-sample outputs,
// no cross-sample reduction).
void forward_batch_serial(const PolicyParameters& params,
                          const std::vector<std::vector<double>>& obs,
                          std::vector<std::vector<double>>& adj_logits,
                          std::vector<double>& values);
void forward_batch_parallel(const PolicyParameters& params,
                            const std::vector<std::vector<double>>& obs,
                            std::vector<std::vector<double>>& adj_logits,
                            std::vector<double>& values);

struct AdamHyper {
  double lr = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// In-place Adam update with bias correction; increments params.step once.
void adam_step(PolicyParameters& params, const MlpGrad& policy_grad,
               const MlpGrad& value_grad, const AdamHyper& hyper);

struct CheckpointMeta {
  int iteration = 0;
  std::uint64_t seed = 0;
  std::string map_name;
};

struct Checkpoint {
  PolicyParameters params;
  CheckpointMeta meta;
};

// Little-endian binary, header magic "ARLCKPT1". Round-trips bit-exactly.
void save_checkpoint(const PolicyParameters& params, const CheckpointMeta& meta,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace arl::net
