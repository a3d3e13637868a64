#include "arl/agents.hpp"

#include <deque>
#include <stdexcept>

#include "arl/net.hpp"

namespace arl::agents {

using env::ActionKind;
using env::ActionMask;
using env::CellType;
using env::kDirections;
using env::MapSpec;
using env::UnitKind;

PathfindResult bfs_first_step(const GameState& state, int from_x, int from_y,
                              const std::function<bool(int, int)>& goal) {
  const MapSpec& m = *state.map;
  if (!m.in_bounds(from_x, from_y))
    throw std::invalid_argument("bfs_first_step: origin out of bounds");
  if (goal(from_x, from_y)) return {std::nullopt, 0};

  auto passable = [&](int x, int y) {
    if (!m.in_bounds(x, y)) return false;
    int idx = m.cell_index(x, y);
    if (m.cells[idx] == CellType::Wall) return false;
    if (state.resources[idx] > 0) return false;
    return state.unit_at(x, y) == nullptr;
  };

  std::vector<int> dist(m.cells.size(), -1);
  std::vector<std::int8_t> first(m.cells.size(), -1);
  std::deque<int> queue;
  int start = m.cell_index(from_x, from_y);
  dist[start] = 0;
  queue.push_back(start);

  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    int cx = cur % m.width;
    int cy = cur / m.width;
    for (Direction d : kDirections) {
      int nx = cx + env::dx(d);
      int ny = cy + env::dy(d);
      if (!m.in_bounds(nx, ny)) continue;
      int ni = m.cell_index(nx, ny);
      if (dist[ni] >= 0) continue;
      bool is_goal = goal(nx, ny);
      if (!is_goal && !passable(nx, ny)) continue;
      dist[ni] = dist[cur] + 1;
      first[ni] = cur == start ? static_cast<std::int8_t>(d) : first[cur];
      if (is_goal)
        return {static_cast<Direction>(first[ni]), dist[ni]};
      queue.push_back(ni);
    }
  }
  return {std::nullopt, -1};
}

namespace {

const env::Unit* adjacent_enemy(const GameState& s, const Unit& u) {
  for (Direction d : kDirections) {
    const env::Unit* t = s.unit_at(u.x + env::dx(d), u.y + env::dy(d));
    if (t && t->player != u.player) return t;
  }
  return nullptr;
}

std::optional<Direction> adjacent_dir(
    const GameState& s, const Unit& u,
    const std::function<bool(int, int)>& pred) {
  for (Direction d : kDirections) {
    int x = u.x + env::dx(d);
    int y = u.y + env::dy(d);
    if (s.map->in_bounds(x, y) && pred(x, y)) return d;
  }
  return std::nullopt;
}

// First legal candidate wins; noop if none is.
Action pick(const ActionMask& mask, Action a) {
  return mask[a.index] ? a : Action::noop();
}

Action move_toward(const GameState& s, const Unit& u, const ActionMask& mask,
                   const std::function<bool(int, int)>& goal) {
  PathfindResult path = bfs_first_step(s, u.x, u.y, goal);
  if (!path.first_step) return Action::noop();
  return pick(mask, Action::make(ActionKind::Move, *path.first_step));
}

Action produce_first_free(const GameState& s, const Unit& u,
                          const ActionMask& mask, ActionKind kind) {
  for (Direction d : kDirections) {
    Action a = Action::make(kind, d);
    if (mask[a.index]) return a;
  }
  return Action::noop();
}

int count_units(const GameState& s, int player, UnitKind kind) {
  int n = 0;
  for (const auto& u : s.units)
    if (u.player == player && u.kind == kind) ++n;
  return n;
}

}  // namespace

Action RuleBasedAgent::act(const GameState& s, const Unit& u) const {
  ActionMask mask = env::legal_actions(s, u);
  int me = u.player;
  auto enemy_at = [&](int x, int y) {
    const env::Unit* t = s.unit_at(x, y);
    return t != nullptr && t->player != me;
  };
  auto friendly_base_at = [&](int x, int y) {
    const env::Unit* t = s.unit_at(x, y);
    return t != nullptr && t->player == me && t->kind == UnitKind::Base;
  };
  auto resource_at = [&](int x, int y) {
    return s.resources[s.map->cell_index(x, y)] > 0;
  };

  switch (u.kind) {
    case UnitKind::Worker: {
      if (auto d = adjacent_dir(s, u, enemy_at))
        return pick(mask, Action::make(ActionKind::Attack, *d));
      if (u.carrying) {
        if (auto d = adjacent_dir(s, u, friendly_base_at))
          return pick(mask, Action::make(ActionKind::Return, *d));
        return move_toward(s, u, mask, friendly_base_at);
      }
      if (auto d = adjacent_dir(s, u, resource_at))
        return pick(mask, Action::make(ActionKind::Harvest, *d));
      {
        PathfindResult path = bfs_first_step(s, u.x, u.y, resource_at);
        if (path.reachable() && path.first_step)
          return pick(mask, Action::make(ActionKind::Move, *path.first_step));
        if (path.reachable()) return Action::noop();
      }
      if (s.stockpile[me] >= env::produce_cost(UnitKind::Barracks) &&
          count_units(s, me, UnitKind::Barracks) == 0)
        return produce_first_free(s, u, mask, ActionKind::ProduceBarracks);
      return move_toward(s, u, mask, enemy_at);
    }
    case UnitKind::Light: {
      if (auto d = adjacent_dir(s, u, enemy_at))
        return pick(mask, Action::make(ActionKind::Attack, *d));
      return move_toward(s, u, mask, enemy_at);
    }
    case UnitKind::Base: {
      if (s.stockpile[me] >= env::produce_cost(UnitKind::Worker) &&
          count_units(s, me, UnitKind::Worker) < 4)
        return produce_first_free(s, u, mask, ActionKind::ProduceWorker);
      return Action::noop();
    }
    case UnitKind::Barracks: {
      if (s.stockpile[me] >= env::produce_cost(UnitKind::Light))
        return produce_first_free(s, u, mask, ActionKind::ProduceLight);
      return Action::noop();
    }
  }
  return Action::noop();
}

Action RandomAgent::act(const GameState& s, const Unit& u) const {
  ActionMask mask = env::legal_actions(s, u);
  int legal = 0;
  for (bool b : mask) legal += b;
  int pick = static_cast<int>(rng_.uniform_int(legal));
  for (int i = 0; i < env::kActionCount; ++i) {
    if (!mask[i]) continue;
    if (pick-- == 0) return Action{i};
  }
  return Action::noop();
}

CheckpointAgent::CheckpointAgent(
    std::shared_ptr<const net::PolicyParameters> params)
    : params_(std::move(params)) {
  if (!params_) throw std::invalid_argument("CheckpointAgent: null params");
}

Action CheckpointAgent::act(const GameState& s, const Unit& u) const {
  env::Observation obs = env::encode_observation(s, u.player);
  if (static_cast<int>(obs.size()) != params_->config.input_dim)
    throw std::runtime_error(
        "checkpoint agent: observation length does not match network input");
  std::vector<double> logits = net::mlp_forward(params_->policy, obs);
  ActionMask mask = env::legal_actions(s, u);
  int best = -1;
  for (int i = 0; i < env::kActionCount; ++i) {
    if (!mask[i]) continue;
    if (best < 0 || logits[i] > logits[best]) best = i;
  }
  return Action{best};
}

}  // namespace arl::agents
