#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "arl/env.hpp"
#include "arl/rng.hpp"

namespace arl {
namespace net {
struct PolicyParameters;
}

namespace env {

// Anything mapping (state, active unit) to a deterministic legal action.
// Implementations are immutable after construction and safe to share.
class AgentInterface {
 public:
  virtual ~AgentInterface() = default;
  virtual Action act(const GameState& state, const Unit& unit) const = 0;
};

}  // namespace env

namespace agents {

using env::Action;
using env::Direction;
using env::GameState;
using env::Unit;

struct PathfindResult {
  std::optional<Direction> first_step;  // empty iff unreachable or distance 0
  int distance = -1;                    // -1 = unreachable
  bool reachable() const { return distance >= 0; }
};

// BFS over passable cells (non-wall, resource-free, unoccupied; goal cells
// may be occupied). Neighbor expansion order N, E, S, W; among equidistant
// goals the BFS discovery order decides.
PathfindResult bfs_first_step(const GameState& state, int from_x, int from_y,
                              const std::function<bool(int, int)>& goal);

// The frozen rule-based base agent / opponent: target priorities per unit
// kind, movement via BFS, noop fallback. Always returns a legal action.
class RuleBasedAgent : public env::AgentInterface {
 public:
  Action act(const GameState& state, const Unit& unit) const override;
};

// Always noop.
class PassiveAgent : public env::AgentInterface {
 public:
  Action act(const GameState&, const Unit&) const override {
    return Action::noop();
  }
};

// Uniform over legal actions. The generator is owned per-instance; for
// reproducible rollouts construct one agent per environment.
class RandomAgent : public env::AgentInterface {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  Action act(const GameState& state, const Unit& unit) const override;

 private:
  mutable Rng rng_;
};

// Greedy argmax over a policy network's masked logits; ties break toward the
// lowest action index.
class CheckpointAgent : public env::AgentInterface {
 public:
  explicit CheckpointAgent(std::shared_ptr<const net::PolicyParameters> params);
  Action act(const GameState& state, const Unit& unit) const override;

 private:
  std::shared_ptr<const net::PolicyParameters> params_;
};

}  // namespace agents
}  // namespace arl
