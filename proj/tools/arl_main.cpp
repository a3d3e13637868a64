#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "arl/config.hpp"
#include "arl/harness.hpp"

namespace {

arl::config::ExperimentConfig load_or_default(const std::string& path) {
  if (path.empty()) return arl::config::desk_defaults();
  return arl::config::load_config_file(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADAPTER-RL experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs/out", map_path, checkpoint_path;
  std::string agent_spec = "rule_based", opponent_spec = "rule_based";
  std::string agent_b = "rule_based";
  std::vector<double> taus = {0.001, 0.01, 0.1, 1.0, 10.0};
  std::uint64_t seed = 0;
  int games = 100;
  bool greedy = false;
  double tau = 0.01;

  auto* train = app.add_subcommand("train", "train the adapter per config");
  train->add_option("--config", config_path, "experiment config file");
  train->add_option("--out", out_dir, "output directory");

  auto* eval = app.add_subcommand("eval", "evaluate an agent or checkpoint");
  eval->add_option("--checkpoint", checkpoint_path,
                   "adapter checkpoint (plays the mixed policy)");
  eval->add_option("--agent", agent_spec,
                   "plain agent spec when no checkpoint is given");
  eval->add_option("--base", agent_spec,
                   "base agent for the mixed policy")->excludes("--agent");
  eval->add_option("--opponent", opponent_spec, "opponent spec");
  eval->add_option("--map", map_path, "map file")->required();
  eval->add_option("--games", games, "number of games");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--tau", tau, "mixing temperature");
  eval->add_flag("--greedy", greedy, "argmax instead of sampling");

  auto* sweep = app.add_subcommand("sweep", "temperature sweep");
  sweep->add_option("--config", config_path, "experiment config file");
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--tau", taus, "temperatures to sweep")->delimiter(',');

  auto* play = app.add_subcommand("play", "render one episode as ASCII");
  play->add_option("--map", map_path, "map file")->required();
  play->add_option("--agent-a", agent_spec, "player 0 agent");
  play->add_option("--agent-b", agent_b, "player 1 agent");
  play->add_option("--seed", seed, "episode seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto cfg = load_or_default(config_path);
      auto result = arl::harness::run_train(cfg, out_dir);
      for (size_t k = 0; k < result.seeds.size(); ++k)
        std::printf("seed%zu final winrate %.3f\n", k,
                    result.seeds[k].final_winrate);
      std::printf("summary: %s\n", result.summary_path.c_str());
    } else if (*eval) {
      auto map = arl::env::load_map_file(map_path);
      std::unique_ptr<arl::harness::LearnerPolicy> policy;
      if (!checkpoint_path.empty()) {
        auto ck = arl::net::load_checkpoint(checkpoint_path);
        auto params = std::make_shared<arl::net::PolicyParameters>(
            std::move(ck.params));
        policy = std::make_unique<arl::harness::MixedPolicy>(
            arl::harness::make_base_provider(agent_spec, tau), params, greedy);
      } else {
        policy = std::make_unique<arl::harness::AgentPolicy>(
            arl::harness::make_agent(agent_spec, seed));
      }
      auto report = arl::harness::run_eval(map, *policy, opponent_spec, games,
                                           seed);
      std::printf("games %d  wins %d  draws %d  losses %d  winrate %.4f\n",
                  report.games, report.wins, report.draws, report.losses,
                  report.winrate());
    } else if (*sweep) {
      auto cfg = load_or_default(config_path);
      auto result = arl::harness::run_sweep(cfg, taus, out_dir);
      std::printf("sweep rows: %zu\ncsv: %s\nmeans: %s\n", result.rows.size(),
                  result.csv_path.c_str(), result.mean_csv_path.c_str());
    } else if (*play) {
      auto map = arl::env::load_map_file(map_path);
      arl::harness::play_ascii(map, agent_spec, agent_b, seed, std::cout);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
