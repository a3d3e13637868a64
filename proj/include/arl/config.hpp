#pragma once

#include <string>
#include <vector>

#include "arl/env.hpp"
#include "arl/mixer.hpp"
#include "arl/net.hpp"
#include "arl/ppo.hpp"

namespace arl::config {

// Agent specs: "rule_based", "passive", "random", "uniform_logits",
// "checkpoint:<path>".
struct ExperimentConfig {
  std::string map_path;
  std::string base_spec = "rule_based";
  std::string opponent_spec = "rule_based";
  mixer::MixerConfig mixer;
  net::NetConfig net;
  ppo::PpoConfig ppo;
  env::EnvConfig environment;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int eval_games = 100;
  bool eval_greedy = false;
};

// "section.key = value" lines, '#' comments. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Desk-scale defaults used by the experiment harness when no file is given.
ExperimentConfig desk_defaults();

}  // namespace arl::config
