#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "arl/config.hpp"
#include "arl/env.hpp"
#include "arl/ppo.hpp"

namespace arl::harness {

// Builds an agent from a spec string; `seed` feeds stochastic agents.
std::shared_ptr<const env::AgentInterface> make_agent(const std::string& spec,
                                                      std::uint64_t seed);

// Builds the base branch of the mixed policy ("uniform_logits" gives the
// from-scratch baseline, anything else wraps the named agent).
std::shared_ptr<const ppo::BaseLogitsProvider> make_base_provider(
    const std::string& spec, double tau);

// Decision source for the learner side of an evaluation game.
class LearnerPolicy {
 public:
  virtual ~LearnerPolicy() = default;
  virtual env::Action act(const env::GameState& state, const env::Unit& unit,
                          Rng& rng) const = 0;
};

class AgentPolicy : public LearnerPolicy {
 public:
  explicit AgentPolicy(std::shared_ptr<const env::AgentInterface> agent);
  env::Action act(const env::GameState& state, const env::Unit& unit,
                  Rng& rng) const override;

 private:
  std::shared_ptr<const env::AgentInterface> agent_;
};

// Samples from (or, in greedy mode, takes the argmax of) the mixed
// base+adapter distribution.
class MixedPolicy : public LearnerPolicy {
 public:
  MixedPolicy(std::shared_ptr<const ppo::BaseLogitsProvider> base,
              std::shared_ptr<const net::PolicyParameters> params,
              bool greedy = false);
  env::Action act(const env::GameState& state, const env::Unit& unit,
                  Rng& rng) const override;

 private:
  std::shared_ptr<const ppo::BaseLogitsProvider> base_;
  std::shared_ptr<const net::PolicyParameters> params_;
  bool greedy_;
};

enum class Outcome { Win, Draw, Loss };

Outcome play_game(const env::MapSpec& map, const LearnerPolicy& learner,
                  std::shared_ptr<const env::AgentInterface> opponent,
                  std::uint64_t seed, int learner_player,
                  env::EnvConfig env_cfg = {});

struct EvalReport {
  int games = 0;
  int wins = 0;
  int draws = 0;
  int losses = 0;
  double winrate() const {
    return games ? (wins + 0.5 * draws) / games : 0.0;
  }
};

// Seeded games with exact starting-player alternation (game i plays the
// learner as player i % 2). Opponents are rebuilt per game from their spec.
EvalReport run_eval(const env::MapSpec& map, const LearnerPolicy& learner,
                    const std::string& opponent_spec, int games,
                    std::uint64_t seed, env::EnvConfig env_cfg = {});

struct SeedRunResult {
  std::uint64_t seed;
  ppo::TrainResult train;
  double final_winrate = 0.0;
};

struct TrainRunResult {
  std::vector<SeedRunResult> seeds;
  std::string summary_path;
};

// One training run per seed; per-seed metrics.csv + checkpoints under
// out_dir/seed<k>/, plus a cross-seed winrate summary CSV.
TrainRunResult run_train(const config::ExperimentConfig& cfg,
                         const std::string& out_dir);

struct SweepRow {
  std::string map_name;
  double tau;
  std::uint64_t seed;
  double winrate;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string csv_path;
  std::string mean_csv_path;
};

// Trains and evaluates per (tau, seed); rows go to sweep.csv, per-tau means
// to sweep_mean.csv.
SweepResult run_sweep(const config::ExperimentConfig& cfg,
                      const std::vector<double>& taus,
                      const std::string& out_dir);

// Renders one seeded episode between two named agents to `out`.
void play_ascii(const env::MapSpec& map, const std::string& agent_a,
                const std::string& agent_b, std::uint64_t seed,
                std::ostream& out, int max_frames = 1000);

}  // namespace arl::harness
