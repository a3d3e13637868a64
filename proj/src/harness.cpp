#include "arl/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "arl/agents.hpp"
#include "arl/mixer.hpp"

namespace arl::harness {

using env::GameState;
using env::Terminal;
using env::Unit;

std::shared_ptr<const env::AgentInterface> make_agent(const std::string& spec,
                                                      std::uint64_t seed) {
  if (spec == "rule_based") return std::make_shared<agents::RuleBasedAgent>();
  if (spec == "passive") return std::make_shared<agents::PassiveAgent>();
  if (spec == "random") return std::make_shared<agents::RandomAgent>(seed);
  if (spec.rfind("checkpoint:", 0) == 0) {
    net::Checkpoint ck = net::load_checkpoint(spec.substr(11));
    auto params =
        std::make_shared<net::PolicyParameters>(std::move(ck.params));
    return std::make_shared<agents::CheckpointAgent>(params);
  }
  throw std::runtime_error("unknown agent spec '" + spec + "'");
}

std::shared_ptr<const ppo::BaseLogitsProvider> make_base_provider(
    const std::string& spec, double tau) {
  if (spec == "uniform_logits")
    return std::make_shared<ppo::UniformBaseLogits>();
  return std::make_shared<ppo::AgentBaseLogits>(make_agent(spec, 0xBA5E),
                                                tau);
}

AgentPolicy::AgentPolicy(std::shared_ptr<const env::AgentInterface> agent)
    : agent_(std::move(agent)) {
  if (!agent_) throw std::invalid_argument("AgentPolicy: null agent");
}

env::Action AgentPolicy::act(const GameState& state, const Unit& unit,
                             Rng&) const {
  return agent_->act(state, unit);
}

MixedPolicy::MixedPolicy(std::shared_ptr<const ppo::BaseLogitsProvider> base,
                         std::shared_ptr<const net::PolicyParameters> params,
                         bool greedy)
    : base_(std::move(base)), params_(std::move(params)), greedy_(greedy) {
  if (!base_ || !params_) throw std::invalid_argument("MixedPolicy: null arg");
}

env::Action MixedPolicy::act(const GameState& state, const Unit& unit,
                             Rng& rng) const {
  std::vector<double> base = base_->base_logits(state, unit);
  env::Observation obs = env::encode_observation(state, unit.player);
  std::vector<double> adj = net::mlp_forward(params_->policy, obs);
  env::ActionMask mask = env::legal_actions(state, unit);
  mixer::MixedDistribution dist =
      mixer::combine_to_probabilities(base, adj, mask);
  if (greedy_) {
    int best = -1;
    for (int i = 0; i < env::kActionCount; ++i)
      if (dist.probabilities[i] > 0.0 &&
          (best < 0 || dist.probabilities[i] > dist.probabilities[best]))
        best = i;
    return env::Action{best};
  }
  return env::Action{mixer::sample_categorical(dist, rng).action};
}

Outcome play_game(const env::MapSpec& map, const LearnerPolicy& learner,
                  std::shared_ptr<const env::AgentInterface> opponent,
                  std::uint64_t seed, int learner_player,
                  env::EnvConfig env_cfg) {
  env::Env game(map, std::move(opponent), env_cfg);
  game.reset(seed, learner_player);
  Rng rng(Rng::derive(seed, 0xF00));
  while (game.state().terminal == Terminal::Ongoing) {
    const Unit& unit = game.state().active_unit();
    env::Action a = learner.act(game.state(), unit, rng);
    game.step(a);
  }
  Terminal t = game.state().terminal;
  if (t == Terminal::Draw) return Outcome::Draw;
  bool learner_won = (t == Terminal::P0Win) == (learner_player == 0);
  return learner_won ? Outcome::Win : Outcome::Loss;
}

EvalReport run_eval(const env::MapSpec& map, const LearnerPolicy& learner,
                    const std::string& opponent_spec, int games,
                    std::uint64_t seed, env::EnvConfig env_cfg) {
  if (games < 1) throw std::invalid_argument("run_eval: games must be >= 1");
  std::vector<Outcome> outcomes(games);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < games; ++i) {
    std::uint64_t game_seed = Rng::derive(seed, static_cast<std::uint64_t>(i));
    auto opponent = make_agent(opponent_spec, Rng::derive(game_seed, 1));
    outcomes[i] = play_game(map, learner, opponent, game_seed, i % 2, env_cfg);
  }
  EvalReport report;
  report.games = games;
  for (Outcome o : outcomes) {
    if (o == Outcome::Win) ++report.wins;
    else if (o == Outcome::Draw) ++report.draws;
    else ++report.losses;
  }
  return report;
}

TrainRunResult run_train(const config::ExperimentConfig& cfg,
                         const std::string& out_dir) {
  env::MapSpec map = env::load_map_file(cfg.map_path);
  std::filesystem::create_directories(out_dir);

  TrainRunResult result;
  for (size_t k = 0; k < cfg.seeds.size(); ++k) {
    std::uint64_t seed = cfg.seeds[k];
    ppo::TrainOptions opts;
    opts.map = map;
    opts.opponent = make_agent(cfg.opponent_spec, Rng::derive(seed, 0x0FF));
    opts.base = make_base_provider(cfg.base_spec, cfg.mixer.temperature);
    opts.net_config = cfg.net;
    opts.ppo = cfg.ppo;
    opts.env_config = cfg.environment;
    opts.seed = seed;
    opts.out_dir = out_dir + "/seed" + std::to_string(k);

    SeedRunResult run;
    run.seed = seed;
    run.train = ppo::train(opts);

    auto params =
        std::make_shared<net::PolicyParameters>(run.train.params);
    MixedPolicy policy(make_base_provider(cfg.base_spec,
                                          cfg.mixer.temperature),
                       params, cfg.eval_greedy);
    EvalReport eval = run_eval(map, policy, cfg.opponent_spec, cfg.eval_games,
                               Rng::derive(seed, 0xEFA1), cfg.environment);
    run.final_winrate = eval.winrate();
    result.seeds.push_back(std::move(run));
  }

  // cross-seed per-iteration winrate summary
  result.summary_path = out_dir + "/summary.csv";
  std::ofstream summary(result.summary_path);
  summary << "iteration,winrate_mean,winrate_min,winrate_max\n";
  size_t iters = result.seeds.front().train.metrics.size();
  for (size_t it = 0; it < iters; ++it) {
    double sum = 0.0, lo = 1.0, hi = 0.0;
    for (const auto& run : result.seeds) {
      double w = run.train.metrics[it].winrate;
      sum += w;
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f\n", it,
                  sum / result.seeds.size(), lo, hi);
    summary << buf;
  }
  return result;
}

SweepResult run_sweep(const config::ExperimentConfig& cfg,
                      const std::vector<double>& taus,
                      const std::string& out_dir) {
  if (taus.empty()) throw std::invalid_argument("run_sweep: empty tau list");
  for (double t : taus)
    if (!(t > 0.0))
      throw std::invalid_argument("run_sweep: temperatures must be > 0");
  std::filesystem::create_directories(out_dir);

  env::MapSpec map = env::load_map_file(cfg.map_path);
  SweepResult result;
  for (size_t ti = 0; ti < taus.size(); ++ti) {
    config::ExperimentConfig run_cfg = cfg;
    run_cfg.mixer.temperature = taus[ti];
    TrainRunResult tr =
        run_train(run_cfg, out_dir + "/tau" + std::to_string(ti));
    for (const auto& run : tr.seeds)
      result.rows.push_back(
          {map.name, taus[ti], run.seed, run.final_winrate});
  }

  result.csv_path = out_dir + "/sweep.csv";
  std::ofstream csv(result.csv_path);
  csv << "map,tau,seed,winrate\n";
  for (const auto& row : result.rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%g,%llu,%.6f\n", row.map_name.c_str(),
                  row.tau, static_cast<unsigned long long>(row.seed),
                  row.winrate);
    csv << buf;
  }

  result.mean_csv_path = out_dir + "/sweep_mean.csv";
  std::ofstream mean_csv(result.mean_csv_path);
  mean_csv << "map,tau,winrate_mean\n";
  for (double tau : taus) {
    double sum = 0.0;
    int n = 0;
    for (const auto& row : result.rows)
      if (row.tau == tau) {
        sum += row.winrate;
        ++n;
      }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%g,%.6f\n", map.name.c_str(), tau,
                  sum / n);
    mean_csv << buf;
  }
  return result;
}

void play_ascii(const env::MapSpec& map, const std::string& agent_a,
                const std::string& agent_b, std::uint64_t seed,
                std::ostream& out, int max_frames) {
  AgentPolicy learner(make_agent(agent_a, Rng::derive(seed, 0xA)));
  auto opponent = make_agent(agent_b, Rng::derive(seed, 0xB));
  env::Env game(map, opponent);
  game.reset(seed, 0);
  Rng rng(Rng::derive(seed, 0xF00));

  int frames = 0;
  int last_tick = -1;
  auto frame = [&]() {
    const GameState& s = game.state();
    out << "tick " << s.tick << "  stockpile P0=" << s.stockpile[0]
        << " P1=" << s.stockpile[1] << "\n"
        << env::render_ascii(s) << "\n";
  };
  frame();
  while (game.state().terminal == Terminal::Ongoing && frames < max_frames) {
    const Unit& unit = game.state().active_unit();
    game.step(learner.act(game.state(), unit, rng));
    if (game.state().tick != last_tick &&
        game.state().terminal == Terminal::Ongoing) {
      last_tick = game.state().tick;
      frame();
      ++frames;
    }
  }
  frame();
  switch (game.state().terminal) {
    case Terminal::P0Win: out << "result: P0 (" << agent_a << ") wins\n"; break;
    case Terminal::P1Win: out << "result: P1 (" << agent_b << ") wins\n"; break;
    case Terminal::Draw: out << "result: draw\n"; break;
    case Terminal::Ongoing: out << "result: cut off\n"; break;
  }
}

}  // namespace arl::harness
