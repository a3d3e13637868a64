#include "arl/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace arl::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, int lineno) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config line " + std::to_string(lineno) +
                           ": expected boolean, got '" + v + "'");
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (size_t hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    try {
      if (key == "map") cfg.map_path = value;
      else if (key == "base") cfg.base_spec = value;
      else if (key == "opponent") cfg.opponent_spec = value;
      else if (key == "mixer.tau") cfg.mixer.temperature = std::stod(value);
      else if (key == "net.hidden") {
        cfg.net.hidden_sizes.clear();
        for (const auto& tok : split_commas(value))
          cfg.net.hidden_sizes.push_back(std::stoi(tok));
      } else if (key == "net.activation") {
        if (value == "tanh") cfg.net.activation = net::Activation::Tanh;
        else if (value == "relu") cfg.net.activation = net::Activation::Relu;
        else throw std::runtime_error("unknown activation '" + value + "'");
      } else if (key == "net.shared_trunk")
        cfg.net.shared_trunk = parse_bool(value, lineno);
      else if (key == "ppo.gamma") cfg.ppo.gamma = std::stod(value);
      else if (key == "ppo.lambda") cfg.ppo.lambda = std::stod(value);
      else if (key == "ppo.clip_eps") cfg.ppo.clip_eps = std::stod(value);
      else if (key == "ppo.value_coef") cfg.ppo.value_coef = std::stod(value);
      else if (key == "ppo.entropy_coef")
        cfg.ppo.entropy_coef = std::stod(value);
      else if (key == "ppo.learning_rate")
        cfg.ppo.learning_rate = std::stod(value);
      else if (key == "ppo.iterations") cfg.ppo.iterations = std::stoi(value);
      else if (key == "ppo.samples_per_iteration")
        cfg.ppo.samples_per_iteration = std::stoi(value);
      else if (key == "ppo.epochs") cfg.ppo.epochs = std::stoi(value);
      else if (key == "ppo.minibatch_size")
        cfg.ppo.minibatch_size = std::stoi(value);
      else if (key == "ppo.normalize_advantages")
        cfg.ppo.normalize_advantages = parse_bool(value, lineno);
      else if (key == "ppo.parallel_envs")
        cfg.ppo.parallel_envs = std::stoi(value);
      else if (key == "env.reward_shaping")
        cfg.environment.reward_shaping = parse_bool(value, lineno);
      else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& tok : split_commas(value))
          cfg.seeds.push_back(std::stoull(tok));
      } else if (key == "eval.games") cfg.eval_games = std::stoi(value);
      else if (key == "eval.greedy") cfg.eval_greedy = parse_bool(value, lineno);
      else
        throw std::runtime_error("unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": bad value '" + value + "' for " + key);
    }
  }
  if (cfg.seeds.empty())
    throw std::runtime_error("config: seeds must be non-empty");
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "map = " << cfg.map_path << "\n";
  out << "base = " << cfg.base_spec << "\n";
  out << "opponent = " << cfg.opponent_spec << "\n";
  out << "mixer.tau = " << format_double(cfg.mixer.temperature) << "\n";
  out << "net.hidden = ";
  for (size_t i = 0; i < cfg.net.hidden_sizes.size(); ++i)
    out << (i ? "," : "") << cfg.net.hidden_sizes[i];
  out << "\n";
  out << "net.activation = "
      << (cfg.net.activation == net::Activation::Tanh ? "tanh" : "relu")
      << "\n";
  out << "net.shared_trunk = " << (cfg.net.shared_trunk ? "true" : "false")
      << "\n";
  out << "ppo.gamma = " << format_double(cfg.ppo.gamma) << "\n";
  out << "ppo.lambda = " << format_double(cfg.ppo.lambda) << "\n";
  out << "ppo.clip_eps = " << format_double(cfg.ppo.clip_eps) << "\n";
  out << "ppo.value_coef = " << format_double(cfg.ppo.value_coef) << "\n";
  out << "ppo.entropy_coef = " << format_double(cfg.ppo.entropy_coef) << "\n";
  out << "ppo.learning_rate = " << format_double(cfg.ppo.learning_rate)
      << "\n";
  out << "ppo.iterations = " << cfg.ppo.iterations << "\n";
  out << "ppo.samples_per_iteration = " << cfg.ppo.samples_per_iteration
      << "\n";
  out << "ppo.epochs = " << cfg.ppo.epochs << "\n";
  out << "ppo.minibatch_size = " << cfg.ppo.minibatch_size << "\n";
  out << "ppo.normalize_advantages = "
      << (cfg.ppo.normalize_advantages ? "true" : "false") << "\n";
  out << "ppo.parallel_envs = " << cfg.ppo.parallel_envs << "\n";
  out << "env.reward_shaping = "
      << (cfg.environment.reward_shaping ? "true" : "false") << "\n";
  out << "seeds = ";
  for (size_t i = 0; i < cfg.seeds.size(); ++i)
    out << (i ? "," : "") << cfg.seeds[i];
  out << "\n";
  out << "eval.games = " << cfg.eval_games << "\n";
  out << "eval.greedy = " << (cfg.eval_greedy ? "true" : "false") << "\n";
  return out.str();
}

ExperimentConfig desk_defaults() {
  ExperimentConfig cfg;
  cfg.mixer.temperature = 0.01;
  cfg.net.hidden_sizes = {64, 64};
  cfg.ppo.iterations = 60;
  cfg.ppo.samples_per_iteration = 2048;
  cfg.ppo.parallel_envs = 8;
  cfg.eval_games = 100;
  return cfg;
}

}  // namespace arl::config
