#include "arl/env.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "arl/agents.hpp"

namespace arl::env {

int max_hp(UnitKind kind) {
  switch (kind) {
    case UnitKind::Base: return 10;
    case UnitKind::Barracks: return 4;
    case UnitKind::Worker: return 1;
    case UnitKind::Light: return 4;
  }
  return 1;
}

int attack_damage(UnitKind kind) {
  switch (kind) {
    case UnitKind::Worker: return 1;
    case UnitKind::Light: return 2;
    default: return 0;
  }
}

int produce_cost(UnitKind kind) {
  switch (kind) {
    case UnitKind::Worker: return 1;
    case UnitKind::Light: return 2;
    case UnitKind::Barracks: return 5;
    default: throw std::logic_error("kind is not producible");
  }
}

bool is_mobile(UnitKind kind) {
  return kind == UnitKind::Worker || kind == UnitKind::Light;
}

UnitKind produced_kind(ActionKind kind) {
  switch (kind) {
    case ActionKind::ProduceWorker: return UnitKind::Worker;
    case ActionKind::ProduceLight: return UnitKind::Light;
    case ActionKind::ProduceBarracks: return UnitKind::Barracks;
    default: throw std::logic_error("not a produce action");
  }
}

char unit_glyph(UnitKind kind, int player) {
  char c = 'w';
  switch (kind) {
    case UnitKind::Base: c = 'b'; break;
    case UnitKind::Barracks: c = 'k'; break;
    case UnitKind::Worker: c = 'w'; break;
    case UnitKind::Light: c = 'l'; break;
  }
  return player == 0 ? c : static_cast<char>(std::toupper(c));
}

Action Action::make(ActionKind kind, Direction dir) {
  if (kind == ActionKind::Noop) return noop();
  int k = static_cast<int>(kind) - 1;  // Move = 0
  return Action{1 + k * 4 + static_cast<int>(dir)};
}

ActionKind Action::kind() const {
  if (index == 0) return ActionKind::Noop;
  return static_cast<ActionKind>(1 + (index - 1) / 4);
}

Direction Action::dir() const {
  if (index == 0) throw std::logic_error("noop has no direction");
  return static_cast<Direction>((index - 1) % 4);
}

int dx(Direction d) {
  switch (d) {
    case Direction::E: return 1;
    case Direction::W: return -1;
    default: return 0;
  }
}

int dy(Direction d) {
  switch (d) {
    case Direction::N: return -1;
    case Direction::S: return 1;
    default: return 0;
  }
}

namespace {

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw std::runtime_error("map parse error, line " + std::to_string(line) +
                           ": " + msg);
}

}  // namespace

MapSpec load_map(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  MapSpec map;

  auto next_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    parse_fail(lineno, "unexpected end of file");
  };

  auto expect_keyword = [&](const std::string& l, const std::string& kw,
                            std::istringstream& rest) {
    rest.str(l);
    std::string word;
    rest >> word;
    if (word != kw) parse_fail(lineno, "expected '" + kw + "'");
  };

  {
    std::istringstream rest;
    expect_keyword(next_line(), "name", rest);
    if (!(rest >> map.name)) parse_fail(lineno, "missing map name");
  }
  {
    std::istringstream rest;
    expect_keyword(next_line(), "size", rest);
    if (!(rest >> map.width >> map.height))
      parse_fail(lineno, "missing width/height");
    if (map.width < 2 || map.height < 2 || map.width > 64 || map.height > 64)
      parse_fail(lineno, "dimensions out of range [2, 64]");
  }
  {
    std::istringstream rest;
    expect_keyword(next_line(), "stockpile", rest);
    if (!(rest >> map.initial_stockpile) || map.initial_stockpile < 0)
      parse_fail(lineno, "bad stockpile value");
  }
  {
    std::istringstream rest;
    expect_keyword(next_line(), "maxticks", rest);
    if (!(rest >> map.max_ticks) || map.max_ticks < 1)
      parse_fail(lineno, "bad maxticks value");
  }

  map.cells.assign(static_cast<size_t>(map.width) * map.height,
                   CellType::Empty);
  map.resource_amount.assign(map.cells.size(), 0);

  for (int y = 0; y < map.height; ++y) {
    std::istringstream row(next_line());
    std::string tok;
    int x = 0;
    while (row >> tok) {
      if (x >= map.width)
        parse_fail(lineno, "row longer than declared width " +
                               std::to_string(map.width));
      int idx = map.cell_index(x, y);
      if (tok == ".") {
        // empty
      } else if (tok == "#") {
        map.cells[idx] = CellType::Wall;
      } else if (tok[0] == 'r') {
        int amount = 0;
        try {
          amount = std::stoi(tok.substr(1));
        } catch (const std::exception&) {
          parse_fail(lineno, "bad resource token '" + tok + "'");
        }
        if (amount <= 0) parse_fail(lineno, "resource amount must be > 0");
        map.cells[idx] = CellType::Resource;
        map.resource_amount[idx] = amount;
      } else if (tok.size() == 2 && (tok[1] == '0' || tok[1] == '1')) {
        UnitKind kind;
        switch (tok[0]) {
          case 'b': kind = UnitKind::Base; break;
          case 'k': kind = UnitKind::Barracks; break;
          case 'w': kind = UnitKind::Worker; break;
          case 'l': kind = UnitKind::Light; break;
          default: parse_fail(lineno, "unknown glyph '" + tok + "'");
        }
        map.initial_units.push_back({tok[1] - '0', kind, x, y});
      } else {
        parse_fail(lineno, "unknown glyph '" + tok + "'");
      }
      ++x;
    }
    if (x != map.width)
      parse_fail(lineno, "row " + std::to_string(y) + " has " +
                             std::to_string(x) + " cells, expected " +
                             std::to_string(map.width));
  }

  std::array<int, 2> counts = {0, 0};
  std::set<std::pair<int, int>> seen;
  for (const auto& u : map.initial_units) {
    ++counts[u.player];
    if (!seen.insert({u.x, u.y}).second)
      parse_fail(lineno, "two units share a cell");
  }
  if (counts[0] == 0 || counts[1] == 0)
    parse_fail(lineno, "each player needs at least one unit");
  return map;
}

MapSpec load_map_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open map file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_map(ss.str());
}

const Unit* GameState::find_unit(int id) const {
  for (const auto& u : units)
    if (u.id == id) return &u;
  return nullptr;
}

const Unit* GameState::unit_at(int x, int y) const {
  for (const auto& u : units)
    if (u.x == x && u.y == y) return &u;
  return nullptr;
}

const Unit& GameState::active_unit() const {
  if (terminal != Terminal::Ongoing)
    throw std::logic_error("no active unit in a terminal state");
  const Unit* u = find_unit(pending_unit_ids.at(active_cursor));
  if (u == nullptr) throw std::logic_error("active unit is dead");
  return *u;
}

int GameState::live_count(int player) const {
  int n = 0;
  for (const auto& u : units)
    if (u.player == player) ++n;
  return n;
}

namespace {

bool cell_free(const GameState& s, int x, int y) {
  const MapSpec& m = *s.map;
  if (!m.in_bounds(x, y)) return false;
  int idx = m.cell_index(x, y);
  if (m.cells[idx] == CellType::Wall) return false;
  if (s.resources[idx] > 0) return false;
  return s.unit_at(x, y) == nullptr;
}

}  // namespace

ActionMask legal_actions(const GameState& state, const Unit& unit) {
  if (state.find_unit(unit.id) == nullptr)
    throw std::logic_error("legal_actions on a dead unit");
  ActionMask mask{};
  mask[0] = true;
  const MapSpec& m = *state.map;
  int me = unit.player;

  for (Direction d : kDirections) {
    int tx = unit.x + dx(d);
    int ty = unit.y + dy(d);
    bool in = m.in_bounds(tx, ty);
    int idx = in ? m.cell_index(tx, ty) : -1;
    const Unit* occ = in ? state.unit_at(tx, ty) : nullptr;

    if (is_mobile(unit.kind) && cell_free(state, tx, ty))
      mask[Action::make(ActionKind::Move, d).index] = true;

    if (unit.kind == UnitKind::Worker && unit.carrying == 0 && in &&
        state.resources[idx] > 0)
      mask[Action::make(ActionKind::Harvest, d).index] = true;

    if (unit.kind == UnitKind::Worker && unit.carrying == 1 && occ &&
        occ->player == me && occ->kind == UnitKind::Base)
      mask[Action::make(ActionKind::Return, d).index] = true;

    if (attack_damage(unit.kind) > 0 && occ && occ->player != me)
      mask[Action::make(ActionKind::Attack, d).index] = true;

    bool target_free = cell_free(state, tx, ty);
    if (unit.kind == UnitKind::Base && target_free &&
        state.stockpile[me] >= produce_cost(UnitKind::Worker))
      mask[Action::make(ActionKind::ProduceWorker, d).index] = true;
    if (unit.kind == UnitKind::Barracks && target_free &&
        state.stockpile[me] >= produce_cost(UnitKind::Light))
      mask[Action::make(ActionKind::ProduceLight, d).index] = true;
    if (unit.kind == UnitKind::Worker && target_free &&
        state.stockpile[me] >= produce_cost(UnitKind::Barracks))
      mask[Action::make(ActionKind::ProduceBarracks, d).index] = true;
  }
  return mask;
}

int observation_size(const MapSpec& map) {
  return kPlaneCount * map.width * map.height + kScalarCount;
}

Observation encode_observation(const GameState& state, int player) {
  const MapSpec& m = *state.map;
  int cells = m.width * m.height;
  Observation obs(static_cast<size_t>(observation_size(m)), 0.0);
  auto plane = [&](int p) { return obs.data() + p * cells; };

  // planes: 0..3 unit-kind one-hot, 4 owner-is-learner, 5 owner-is-opponent,
  // 6 hp fraction, 7 carrying, 8 resource/10, 9 wall, 10 active marker
  for (const auto& u : state.units) {
    int c = m.cell_index(u.x, u.y);
    plane(static_cast<int>(u.kind))[c] = 1.0;
    plane(u.player == player ? 4 : 5)[c] = 1.0;
    plane(6)[c] = static_cast<double>(u.hp) / max_hp(u.kind);
    plane(7)[c] = u.carrying;
  }
  for (int c = 0; c < cells; ++c) {
    plane(8)[c] = state.resources[c] / 10.0;
    if (m.cells[c] == CellType::Wall) plane(9)[c] = 1.0;
  }
  if (state.terminal == Terminal::Ongoing && player == state.learner) {
    const Unit& a = state.active_unit();
    plane(10)[m.cell_index(a.x, a.y)] = 1.0;
  }
  int opp = 1 - player;
  obs[kPlaneCount * cells + 0] = state.stockpile[player] / 10.0;
  obs[kPlaneCount * cells + 1] = state.stockpile[opp] / 10.0;
  obs[kPlaneCount * cells + 2] =
      static_cast<double>(state.tick) / m.max_ticks;
  return obs;
}

std::string render_ascii(const GameState& state) {
  const MapSpec& m = *state.map;
  std::string out;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      int idx = m.cell_index(x, y);
      char c = '.';
      if (m.cells[idx] == CellType::Wall) c = '#';
      else if (state.resources[idx] > 0) c = 'r';
      if (const Unit* u = state.unit_at(x, y))
        c = unit_glyph(u->kind, u->player);
      out += c;
      if (x + 1 < m.width) out += ' ';
    }
    out += '\n';
  }
  return out;
}

Env::Env(const MapSpec& map, std::shared_ptr<const AgentInterface> opponent,
         EnvConfig cfg)
    : map_(map), opponent_(std::move(opponent)), cfg_(cfg) {
  if (!opponent_) throw std::invalid_argument("opponent agent required");
}

const GameState& Env::reset(std::uint64_t seed, int learner_player) {
  state_ = GameState{};
  state_.map = &map_;
  state_.learner = learner_player;
  state_.rng_seed = seed;
  state_.resources = map_.resource_amount;
  state_.stockpile = {map_.initial_stockpile, map_.initial_stockpile};
  for (const auto& iu : map_.initial_units) {
    Unit u;
    u.id = state_.next_unit_id++;
    u.player = iu.player;
    u.kind = iu.kind;
    u.x = iu.x;
    u.y = iu.y;
    u.hp = max_hp(iu.kind);
    state_.units.push_back(u);
  }
  begin_tick();
  return state_;
}

// Phase order within a tick is fixed by player: P0 units act, then P1
// units, then combat and production resolve. When the learner is P1 the
// opponent phase therefore runs at the start of the tick. This keeps a game
// with swapped roles the exact mirror of the original.
void Env::begin_tick() {
  state_.pending_unit_ids.clear();
  for (const auto& u : state_.units)
    if (u.player == state_.learner) state_.pending_unit_ids.push_back(u.id);
  state_.active_cursor = 0;
  state_.pending_attacks.clear();
  state_.pending_production.clear();
  if (state_.learner == 1) run_opponent_phase();
}

void Env::apply_action(Unit& unit, Action action, double* shaping) {
  GameState& s = state_;
  switch (action.kind()) {
    case ActionKind::Noop:
      break;
    case ActionKind::Move:
      unit.x += dx(action.dir());
      unit.y += dy(action.dir());
      break;
    case ActionKind::Harvest: {
      int idx = map_.cell_index(unit.x + dx(action.dir()),
                                unit.y + dy(action.dir()));
      --s.resources[idx];
      unit.carrying = 1;
      if (shaping) *shaping += cfg_.harvest_bonus;
      break;
    }
    case ActionKind::Return:
      unit.carrying = 0;
      ++s.stockpile[unit.player];
      if (shaping) *shaping += cfg_.harvest_bonus;
      break;
    case ActionKind::Attack: {
      const Unit* target = s.unit_at(unit.x + dx(action.dir()),
                                     unit.y + dy(action.dir()));
      s.pending_attacks.push_back(
          {unit.id, target->id, attack_damage(unit.kind)});
      break;
    }
    case ActionKind::ProduceWorker:
    case ActionKind::ProduceLight:
    case ActionKind::ProduceBarracks: {
      UnitKind kind = produced_kind(action.kind());
      int cost = produce_cost(kind);
      s.stockpile[unit.player] -= cost;
      s.produced_cost_total += cost;
      s.pending_production.push_back({unit.player, kind,
                                      unit.x + dx(action.dir()),
                                      unit.y + dy(action.dir()), cost});
      break;
    }
  }
}

StepResult Env::step(Action action) {
  GameState& s = state_;
  if (s.terminal != Terminal::Ongoing)
    throw std::logic_error("step() on a terminal state");
  Unit* unit = nullptr;
  for (auto& u : s.units)
    if (u.id == s.pending_unit_ids.at(s.active_cursor)) unit = &u;
  if (unit == nullptr) throw std::logic_error("active unit missing");

  ActionMask mask = legal_actions(s, *unit);
  if (action.index < 0 || action.index >= kActionCount ||
      !mask[action.index])
    throw std::runtime_error("illegal action " + std::to_string(action.index) +
                             " for unit " + std::to_string(unit->id));

  StepResult result;
  double shaping = 0.0;
  apply_action(*unit, action, cfg_.reward_shaping ? &shaping : nullptr);
  ++s.active_cursor;

  if (s.active_cursor >= static_cast<int>(s.pending_unit_ids.size()))
    finish_tick(result);
  if (cfg_.reward_shaping) result.reward += shaping;
  result.terminal = s.terminal;
  return result;
}

void Env::run_opponent_phase() {
  GameState& s = state_;
  int opp = 1 - s.learner;
  std::vector<int> opp_ids;
  for (const auto& u : s.units)
    if (u.player == opp) opp_ids.push_back(u.id);
  for (int id : opp_ids) {
    Unit* u = nullptr;
    for (auto& cand : s.units)
      if (cand.id == id) u = &cand;
    if (u == nullptr) continue;
    Action a = opponent_->act(s, *u);
    ActionMask mask = legal_actions(s, *u);
    if (!mask[a.index])
      throw std::runtime_error("opponent agent returned an illegal action");
    apply_action(*u, a, nullptr);
  }
}

void Env::finish_tick(StepResult& result) {
  GameState& s = state_;
  int opp = 1 - s.learner;
  if (s.learner == 0) run_opponent_phase();

  // simultaneous combat: all declared attacks land, then removals. A dying
  // worker drops whatever it carries onto its cell.
  for (const auto& atk : s.pending_attacks) {
    for (auto& u : s.units)
      if (u.id == atk.target_id) u.hp -= atk.damage;
  }
  for (const auto& u : s.units)
    if (u.hp <= 0 && u.carrying > 0)
      s.resources[map_.cell_index(u.x, u.y)] += u.carrying;
  std::erase_if(s.units, [](const Unit& u) { return u.hp <= 0; });

  // production spawns; blocked spawns refund their cost
  double produce_shaping = 0.0;
  for (const auto& pp : s.pending_production) {
    if (cell_free(s, pp.x, pp.y)) {
      Unit u;
      u.id = s.next_unit_id++;
      u.player = pp.player;
      u.kind = pp.kind;
      u.x = pp.x;
      u.y = pp.y;
      u.hp = max_hp(pp.kind);
      s.units.push_back(u);
      if (pp.player == s.learner) produce_shaping += cfg_.produce_bonus;
    } else {
      s.stockpile[pp.player] += pp.cost;
      s.produced_cost_total -= pp.cost;
    }
  }
  if (cfg_.reward_shaping) result.reward += produce_shaping;

  ++s.tick;
  int mine = s.live_count(s.learner);
  int theirs = s.live_count(opp);
  if (mine == 0 && theirs == 0) {
    s.terminal = Terminal::Draw;
  } else if (theirs == 0) {
    s.terminal = s.learner == 0 ? Terminal::P0Win : Terminal::P1Win;
    result.reward += 1.0;
  } else if (mine == 0) {
    s.terminal = s.learner == 0 ? Terminal::P1Win : Terminal::P0Win;
    result.reward += -1.0;
  } else if (s.tick >= map_.max_ticks) {
    s.terminal = Terminal::Draw;
  }
  result.done = s.terminal != Terminal::Ongoing;
  if (!result.done) begin_tick();
}

}  // namespace arl::env
