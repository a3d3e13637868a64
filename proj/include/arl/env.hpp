#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace arl::env {

inline constexpr int kActionCount = 29;
inline constexpr int kPlaneCount = 11;
inline constexpr int kScalarCount = 3;

enum class CellType : std::uint8_t { Empty, Wall, Resource };

enum class UnitKind : std::uint8_t { Base, Barracks, Worker, Light };

enum class ActionKind : std::uint8_t {
  Noop,
  Move,
  Harvest,
  Return,
  Attack,
  ProduceWorker,
  ProduceLight,
  ProduceBarracks,
};

enum class Direction : std::uint8_t { N, E, S, W };

enum class Terminal : std::uint8_t { Ongoing, P0Win, P1Win, Draw };

int max_hp(UnitKind kind);
int attack_damage(UnitKind kind);
int produce_cost(UnitKind kind);  // cost of producing this kind
bool is_mobile(UnitKind kind);
UnitKind produced_kind(ActionKind kind);  // for Produce* actions
char unit_glyph(UnitKind kind, int player);

// Flat discrete action: 0 = noop, 1..28 = (kind, direction) row-major,
// kinds ordered Move, Harvest, Return, Attack, ProduceWorker, ProduceLight,
// ProduceBarracks; directions N, E, S, W.
struct Action {
  int index = 0;

  static Action noop() { return Action{0}; }
  static Action make(ActionKind kind, Direction dir);
  ActionKind kind() const;
  Direction dir() const;
  bool operator==(const Action&) const = default;
};

int dx(Direction d);
int dy(Direction d);
inline constexpr std::array<Direction, 4> kDirections = {
    Direction::N, Direction::E, Direction::S, Direction::W};

struct InitialUnit {
  int player;
  UnitKind kind;
  int x, y;
};

struct MapSpec {
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<CellType> cells;          // row-major, height rows of width
  std::vector<int> resource_amount;     // parallel to cells, 0 unless Resource
  std::vector<InitialUnit> initial_units;
  int initial_stockpile = 0;
  int max_ticks = 0;

  int cell_index(int x, int y) const { return y * width + x; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
};

// Parses the ASCII map format. Throws std::runtime_error with a line number
// on malformed input.
MapSpec load_map(const std::string& text);
MapSpec load_map_file(const std::string& path);

struct Unit {
  int id = 0;
  int player = 0;
  UnitKind kind = UnitKind::Worker;
  int x = 0, y = 0;
  int hp = 1;
  int carrying = 0;  // Workers only, 0 or 1
};

struct PendingAttack {
  int attacker_id;
  int target_id;
  int damage;
};

struct PendingProduce {
  int player;
  UnitKind kind;
  int x, y;
  int cost;
};

struct GameState {
  const MapSpec* map = nullptr;
  int tick = 0;
  std::vector<Unit> units;  // id-ordered, live units only
  std::array<int, 2> stockpile = {0, 0};
  std::vector<int> resources;  // current amounts, parallel to map cells
  int learner = 0;             // player index the step() API controls
  Terminal terminal = Terminal::Ongoing;
  std::uint64_t rng_seed = 0;

  // intra-tick bookkeeping
  std::vector<int> pending_unit_ids;  // learner units still to act this tick
  int active_cursor = 0;
  std::vector<PendingAttack> pending_attacks;
  std::vector<PendingProduce> pending_production;
  int next_unit_id = 0;
  int produced_cost_total = 0;  // includes pending, refunded on failed spawn

  const Unit* find_unit(int id) const;
  const Unit* unit_at(int x, int y) const;
  const Unit& active_unit() const;
  int live_count(int player) const;
};

using ActionMask = std::array<bool, kActionCount>;

// Legality rules for `unit` (either player) in `state`. noop is always legal.
ActionMask legal_actions(const GameState& state, const Unit& unit);

struct StepResult {
  double reward = 0.0;
  bool done = false;
  Terminal terminal = Terminal::Ongoing;
};

using Observation = std::vector<double>;

int observation_size(const MapSpec& map);

// Feature planes from `player`'s perspective; length 11*W*H + 3.
Observation encode_observation(const GameState& state, int player);

std::string render_ascii(const GameState& state);

class AgentInterface;  // see agents.hpp

struct EnvConfig {
  bool reward_shaping = false;
  double harvest_bonus = 0.02;   // also for returns
  double produce_bonus = 0.05;
};

// One mini-RTS game from the learner's perspective. The opponent agent is
// embedded and acts after the learner within every tick. Strictly
// sequential; independent instances may run on different threads.
class Env {
 public:
  Env(const MapSpec& map, std::shared_ptr<const AgentInterface> opponent,
      EnvConfig cfg = {});

  // Deterministic for fixed (map, seed, learner_player).
  const GameState& reset(std::uint64_t seed, int learner_player = 0);

  // Applies one learner action. Throws on illegal actions and on stepping a
  // terminal state.
  StepResult step(Action action);

  const GameState& state() const { return state_; }
  const MapSpec& map() const { return map_; }

 private:
  void apply_action(Unit& unit, Action action, double* shaping);
  void run_opponent_phase();
  void finish_tick(StepResult& result);
  void begin_tick();

  MapSpec map_;
  std::shared_ptr<const AgentInterface> opponent_;
  EnvConfig cfg_;
  GameState state_;
};

}  // namespace arl::env
