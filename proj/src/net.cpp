#include "arl/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace arl::net {

namespace {

double activate(double x, Activation a) {
  return a == Activation::Tanh ? std::tanh(x) : std::max(0.0, x);
}

double activate_grad(double pre, double post, Activation a) {
  return a == Activation::Tanh ? 1.0 - post * post : (pre > 0.0 ? 1.0 : 0.0);
}

// Orthogonal matrix via Gram-Schmidt on Gaussian rows (transposed when
// rows > cols), scaled by `gain`.
void orthogonal_init(std::vector<double>& w, int rows, int cols, double gain,
                     Rng& rng) {
  int big = std::max(rows, cols);
  int small = std::min(rows, cols);
  std::vector<std::vector<double>> q(small, std::vector<double>(big));
  for (auto& row : q)
    for (auto& v : row) v = rng.normal();
  for (int i = 0; i < small; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < big; ++k) dot += q[i][k] * q[j][k];
      for (int k = 0; k < big; ++k) q[i][k] -= dot * q[j][k];
    }
    double norm = 0.0;
    for (double v : q[i]) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (double& v : q[i]) v /= norm;
  }
  w.assign(static_cast<size_t>(rows) * cols, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      w[static_cast<size_t>(r) * cols + c] =
          gain * (rows <= cols ? q[r][c] : q[c][r]);
}

Mlp build_mlp(int input, const std::vector<int>& hidden, int output,
              Activation act, double out_gain, Rng& rng) {
  Mlp net;
  net.activation = act;
  net.sizes.push_back(input);
  for (int h : hidden) net.sizes.push_back(h);
  net.sizes.push_back(output);
  for (size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    int in = net.sizes[l];
    int out = net.sizes[l + 1];
    bool last = l + 2 == net.sizes.size();
    std::vector<double> w;
    orthogonal_init(w, out, in, last ? out_gain : std::sqrt(2.0), rng);
    net.w.push_back(std::move(w));
    net.b.emplace_back(out, 0.0);
  }
  return net;
}

}  // namespace

MlpGrad zero_grad_like(const Mlp& net) {
  MlpGrad g;
  for (const auto& w : net.w) g.w.emplace_back(w.size(), 0.0);
  for (const auto& b : net.b) g.b.emplace_back(b.size(), 0.0);
  return g;
}

void accumulate(MlpGrad& into, const MlpGrad& from) {
  for (size_t l = 0; l < into.w.size(); ++l) {
    for (size_t i = 0; i < into.w[l].size(); ++i) into.w[l][i] += from.w[l][i];
    for (size_t i = 0; i < into.b[l].size(); ++i) into.b[l][i] += from.b[l][i];
  }
}

void scale(MlpGrad& g, double factor) {
  for (auto& w : g.w)
    for (double& v : w) v *= factor;
  for (auto& b : g.b)
    for (double& v : b) v *= factor;
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x,
                                MlpCache* cache) {
  if (static_cast<int>(x.size()) != net.sizes.front())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  std::vector<double> cur(x.begin(), x.end());
  if (cache) {
    cache->input = cur;
    cache->pre.clear();
    cache->post.clear();
  }
  int layers = net.layer_count();
  for (int l = 0; l < layers; ++l) {
    int in = net.sizes[l];
    int out = net.sizes[l + 1];
    std::vector<double> next(out);
    const double* w = net.w[l].data();
    for (int o = 0; o < out; ++o) {
      double acc = net.b[l][o];
      const double* row = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * cur[i];
      next[o] = acc;
    }
    bool last = l + 1 == layers;
    if (cache) cache->pre.push_back(next);
    if (!last)
      for (double& v : next) v = activate(v, net.activation);
    if (cache) cache->post.push_back(next);
    cur = std::move(next);
  }
  return cur;
}

void mlp_backward(const Mlp& net, const MlpCache& cache,
                  std::span<const double> d_out, MlpGrad& grad) {
  int layers = net.layer_count();
  std::vector<double> delta(d_out.begin(), d_out.end());
  for (int l = layers - 1; l >= 0; --l) {
    int in = net.sizes[l];
    int out = net.sizes[l + 1];
    const std::vector<double>& below =
        l == 0 ? cache.input : cache.post[l - 1];
    double* gw = grad.w[l].data();
    for (int o = 0; o < out; ++o) {
      double d = delta[o];
      grad.b[l][o] += d;
      double* row = gw + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) row[i] += d * below[i];
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    const double* w = net.w[l].data();
    for (int o = 0; o < out; ++o) {
      double d = delta[o];
      const double* row = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += d * row[i];
    }
    for (int i = 0; i < in; ++i)
      prev[i] *= activate_grad(cache.pre[l - 1][i], cache.post[l - 1][i],
                               net.activation);
    delta = std::move(prev);
  }
}

AdamState zero_adam_like(const Mlp& net) {
  AdamState s;
  for (const auto& w : net.w) {
    s.m_w.emplace_back(w.size(), 0.0);
    s.v_w.emplace_back(w.size(), 0.0);
  }
  for (const auto& b : net.b) {
    s.m_b.emplace_back(b.size(), 0.0);
    s.v_b.emplace_back(b.size(), 0.0);
  }
  return s;
}

PolicyParameters init_params(const NetConfig& config, std::uint64_t seed) {
  if (config.input_dim <= 0)
    throw std::invalid_argument("init_params: input_dim must be positive");
  if (config.hidden_sizes.empty())
    throw std::invalid_argument("init_params: at least one hidden layer");
  for (int h : config.hidden_sizes)
    if (h <= 0) throw std::invalid_argument("init_params: bad hidden size");
  PolicyParameters p;
  p.config = config;
  Rng rng_policy(Rng::derive(seed, 0));
  Rng rng_value(Rng::derive(seed, 1));
  p.policy = build_mlp(config.input_dim, config.hidden_sizes,
                       config.policy_outputs, config.activation, 0.01,
                       rng_policy);
  p.value = build_mlp(config.input_dim, config.hidden_sizes,
                      config.value_outputs, config.activation, 1.0, rng_value);
  p.adam_policy = zero_adam_like(p.policy);
  p.adam_value = zero_adam_like(p.value);
  return p;
}

ForwardResult forward(const PolicyParameters& params,
                      std::span<const double> observation) {
  ForwardResult r;
  r.adj_logits = mlp_forward(params.policy, observation);
  r.value = mlp_forward(params.value, observation)[0];
  return r;
}

void forward_batch_serial(const PolicyParameters& params,
                          const std::vector<std::vector<double>>& obs,
                          std::vector<std::vector<double>>& adj_logits,
                          std::vector<double>& values) {
  size_t n = obs.size();
  adj_logits.resize(n);
  values.resize(n);
  for (size_t i = 0; i < n; ++i) {
    ForwardResult r = forward(params, obs[i]);
    adj_logits[i] = std::move(r.adj_logits);
    values[i] = r.value;
  }
}

void forward_batch_parallel(const PolicyParameters& params,
                            const std::vector<std::vector<double>>& obs,
                            std::vector<std::vector<double>>& adj_logits,
                            std::vector<double>& values) {
  int n = static_cast<int>(obs.size());
  adj_logits.resize(n);
  values.resize(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    ForwardResult r = forward(params, obs[i]);
    adj_logits[i] = std::move(r.adj_logits);
    values[i] = r.value;
  }
}

namespace {

void adam_update(std::vector<double>& p, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v,
                 const AdamHyper& h, double bc1, double bc2) {
  for (size_t i = 0; i < p.size(); ++i) {
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    p[i] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
  }
}

void adam_mlp(Mlp& net, const MlpGrad& grad, AdamState& state,
              const AdamHyper& h, double bc1, double bc2) {
  for (int l = 0; l < net.layer_count(); ++l) {
    if (grad.w[l].size() != net.w[l].size() ||
        grad.b[l].size() != net.b[l].size())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    adam_update(net.w[l], grad.w[l], state.m_w[l], state.v_w[l], h, bc1, bc2);
    adam_update(net.b[l], grad.b[l], state.m_b[l], state.v_b[l], h, bc1, bc2);
  }
}

}  // namespace

void adam_step(PolicyParameters& params, const MlpGrad& policy_grad,
               const MlpGrad& value_grad, const AdamHyper& hyper) {
  ++params.step;
  double t = static_cast<double>(params.step);
  double bc1 = 1.0 - std::pow(hyper.beta1, t);
  double bc2 = 1.0 - std::pow(hyper.beta2, t);
  adam_mlp(params.policy, policy_grad, params.adam_policy, hyper, bc1, bc2);
  adam_mlp(params.value, value_grad, params.adam_value, hyper, bc1, bc2);
}

// ---------------------------------------------------------------------------
// checkpoint format: magic "ARLCKPT1", uint32 config-text length + text,
// then each array as uint64 count + count doubles, little-endian, in
// declaration order (policy w/b, value w/b, adam moments, step).

namespace {

constexpr char kMagic[8] = {'A', 'R', 'L', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.write(buf, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

void write_array(std::ostream& out, const std::vector<double>& a) {
  write_u64(out, a.size());
  out.write(reinterpret_cast<const char*>(a.data()),
            static_cast<std::streamsize>(a.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& in) {
  char buf[4];
  in.read(buf, 4);
  if (!in) throw std::runtime_error("corrupt checkpoint: truncated");
  std::uint32_t v;
  std::memcpy(&v, buf, 4);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  if (!in) throw std::runtime_error("corrupt checkpoint: truncated");
  std::uint64_t v;
  std::memcpy(&v, buf, 8);
  return v;
}

void read_array(std::istream& in, std::vector<double>& a,
                std::uint64_t expected) {
  std::uint64_t n = read_u64(in);
  if (n != expected)
    throw std::runtime_error("corrupt checkpoint: array length mismatch");
  a.resize(n);
  in.read(reinterpret_cast<char*>(a.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("corrupt checkpoint: truncated");
}

std::string config_text(const NetConfig& c, const CheckpointMeta& m) {
  std::ostringstream out;
  out << "input_dim " << c.input_dim << "\n";
  out << "hidden";
  for (int h : c.hidden_sizes) out << " " << h;
  out << "\n";
  out << "activation " << (c.activation == Activation::Tanh ? "tanh" : "relu")
      << "\n";
  out << "policy_outputs " << c.policy_outputs << "\n";
  out << "value_outputs " << c.value_outputs << "\n";
  out << "shared_trunk " << (c.shared_trunk ? 1 : 0) << "\n";
  out << "iteration " << m.iteration << "\n";
  out << "seed " << m.seed << "\n";
  out << "map " << m.map_name << "\n";
  return out.str();
}

void parse_config_text(const std::string& text, NetConfig& c,
                       CheckpointMeta& m) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "input_dim") ls >> c.input_dim;
    else if (key == "hidden") {
      c.hidden_sizes.clear();
      int h;
      while (ls >> h) c.hidden_sizes.push_back(h);
    } else if (key == "activation") {
      std::string a;
      ls >> a;
      c.activation = a == "relu" ? Activation::Relu : Activation::Tanh;
    } else if (key == "policy_outputs") ls >> c.policy_outputs;
    else if (key == "value_outputs") ls >> c.value_outputs;
    else if (key == "shared_trunk") {
      int v;
      ls >> v;
      c.shared_trunk = v != 0;
    } else if (key == "iteration") ls >> m.iteration;
    else if (key == "seed") ls >> m.seed;
    else if (key == "map") ls >> m.map_name;
  }
}

void for_each_array(Mlp& net, AdamState& adam,
                    const std::function<void(std::vector<double>&)>& fn) {
  for (auto& w : net.w) fn(w);
  for (auto& b : net.b) fn(b);
  for (auto& a : adam.m_w) fn(a);
  for (auto& a : adam.v_w) fn(a);
  for (auto& a : adam.m_b) fn(a);
  for (auto& a : adam.v_b) fn(a);
}

}  // namespace

void save_checkpoint(const PolicyParameters& params, const CheckpointMeta& meta,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for write: " + path);
  out.write(kMagic, 8);
  std::string cfg = config_text(params.config, meta);
  write_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  // const_cast-free copy for the shared traversal helper
  PolicyParameters copy = params;
  for_each_array(copy.policy, copy.adam_policy,
                 [&](std::vector<double>& a) { write_array(out, a); });
  for_each_array(copy.value, copy.adam_value,
                 [&](std::vector<double>& a) { write_array(out, a); });
  write_u64(out, static_cast<std::uint64_t>(params.step));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "ARLCKPT", 7) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  if (magic[7] != '1')
    throw std::runtime_error("unsupported checkpoint version: " +
                             std::string(1, magic[7]));
  std::uint32_t cfg_len = read_u32(in);
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), cfg_len);
  if (!in) throw std::runtime_error("corrupt checkpoint: truncated");

  Checkpoint ck;
  NetConfig cfg;
  cfg.hidden_sizes.clear();
  parse_config_text(cfg_text, cfg, ck.meta);
  if (cfg.input_dim <= 0 || cfg.hidden_sizes.empty())
    throw std::runtime_error("corrupt checkpoint: bad config block");
  // Build skeleton with the right shapes, then overwrite every array.
  ck.params = init_params(cfg, 0);
  for_each_array(ck.params.policy, ck.params.adam_policy,
                 [&](std::vector<double>& a) {
                   read_array(in, a, a.size());
                 });
  for_each_array(ck.params.value, ck.params.adam_value,
                 [&](std::vector<double>& a) {
                   read_array(in, a, a.size());
                 });
  ck.params.step = static_cast<std::int64_t>(read_u64(in));
  return ck;
}

}  // namespace arl::net
