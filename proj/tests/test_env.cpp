#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <string>
#include <vector>

#include "arl/agents.hpp"
#include "arl/env.hpp"
#include "test_util.hpp"

using namespace arl;
using env::Action;
using env::ActionKind;
using env::Direction;

namespace {

std::string state_signature(const env::GameState& s) {
  std::string sig = env::render_ascii(s);
  sig += "t=" + std::to_string(s.tick);
  sig += " s0=" + std::to_string(s.stockpile[0]);
  sig += " s1=" + std::to_string(s.stockpile[1]);
  for (const auto& u : s.units) {
    sig += " u" + std::to_string(u.id) + ":" + std::to_string(u.hp) + "," +
           std::to_string(u.carrying);
  }
  return sig;
}

}  // namespace

TEST_CASE("action index codec covers all 29 actions") {
  CHECK(Action::noop().index == 0);
  CHECK(Action::noop().kind() == ActionKind::Noop);
  int expected = 1;
  for (auto kind : {ActionKind::Move, ActionKind::Harvest, ActionKind::Return,
                    ActionKind::Attack, ActionKind::ProduceWorker,
                    ActionKind::ProduceLight, ActionKind::ProduceBarracks}) {
    for (auto dir : env::kDirections) {
      Action a = Action::make(kind, dir);
      CHECK(a.index == expected);
      CHECK(a.kind() == kind);
      CHECK(a.dir() == dir);
      ++expected;
    }
  }
  CHECK(expected == env::kActionCount);
  CHECK(Action::make(ActionKind::Move, Direction::E).index == 2);
  CHECK(Action::make(ActionKind::Attack, Direction::N).index == 13);
}

TEST_CASE("map parsing: well-formed maps") {
  auto map = testutil::load_named_map("basesWorkers8x8A");
  CHECK(map.name == "basesWorkers8x8A");
  CHECK(map.width == 8);
  CHECK(map.height == 8);
  CHECK(map.max_ticks >= 1);
  int bases[2] = {0, 0}, workers[2] = {0, 0};
  for (const auto& u : map.initial_units) {
    if (u.kind == env::UnitKind::Base) ++bases[u.player];
    if (u.kind == env::UnitKind::Worker) ++workers[u.player];
  }
  CHECK(bases[0] == 1);
  CHECK(bases[1] == 1);
  CHECK(workers[0] == 1);
  CHECK(workers[1] == 1);
  int resource_cells = 0;
  for (auto c : map.cells)
    if (c == env::CellType::Resource) ++resource_cells;
  CHECK(resource_cells > 0);
}

TEST_CASE("map parsing: every bundled map loads and is mirror-symmetric") {
  for (const char* name :
       {"basesWorkers8x8A", "basesWorkers12x12", "basesWorkers16x16",
        "noresources", "TwoBasesBarracks", "FourBasesWorkers",
        "basesWorkers24x24", "basesWorkers24x24L", "DoubleGame24x24"}) {
    CAPTURE(name);
    auto map = testutil::load_named_map(name);
    CHECK(map.width >= 2);
    CHECK(!map.initial_units.empty());

    // terrain symmetric under 180-degree rotation
    for (int y = 0; y < map.height; ++y)
      for (int x = 0; x < map.width; ++x) {
        int a = map.cell_index(x, y);
        int b = map.cell_index(map.width - 1 - x, map.height - 1 - y);
        CHECK(map.cells[a] == map.cells[b]);
        CHECK(map.resource_amount[a] == map.resource_amount[b]);
      }
    // each unit has its mirrored counterpart on the other side
    std::multiset<std::tuple<int, int, int, int>> units, mirrored;
    for (const auto& u : map.initial_units) {
      units.insert({u.player, static_cast<int>(u.kind), u.x, u.y});
      mirrored.insert({1 - u.player, static_cast<int>(u.kind),
                       map.width - 1 - u.x, map.height - 1 - u.y});
    }
    CHECK(units == mirrored);
  }
}

TEST_CASE("map parsing: malformed inputs fail with a line number") {
  SUBCASE("short row") {
    std::string text =
        "name bad\nsize 3 2\nstockpile 0\nmaxticks 5\n"
        ". w0 .\n. w1\n";
    CHECK_THROWS_WITH_AS(env::load_map(text),
                         doctest::Contains("line 6"), std::runtime_error);
  }
  SUBCASE("unknown glyph") {
    std::string text =
        "name bad\nsize 2 2\nstockpile 0\nmaxticks 5\n"
        ". w0\nq w1\n";
    CHECK_THROWS_WITH_AS(env::load_map(text),
                         doctest::Contains("glyph"), std::runtime_error);
  }
  SUBCASE("missing header") {
    CHECK_THROWS_AS(env::load_map("size 2 2\n"), std::runtime_error);
  }
  SUBCASE("player without units") {
    std::string text =
        "name bad\nsize 2 2\nstockpile 0\nmaxticks 5\n"
        ". w0\n. .\n";
    CHECK_THROWS_AS(env::load_map(text), std::runtime_error);
  }
  SUBCASE("nonexistent file") {
    CHECK_THROWS_AS(env::load_map_file("/nonexistent/nope.map"),
                    std::runtime_error);
  }
}

TEST_CASE("reset builds the declared starting position") {
  auto map = env::load_map(testutil::kHarvestMap);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  const auto& s = e.reset(0);
  CHECK(s.tick == 0);
  CHECK(s.terminal == env::Terminal::Ongoing);
  CHECK(s.stockpile[0] == 0);
  CHECK(s.stockpile[1] == 0);
  CHECK(s.units.size() == 4);
  for (const auto& u : s.units) {
    CHECK(u.hp == env::max_hp(u.kind));
    CHECK(u.carrying == 0);
  }
  CHECK(s.resources[map.cell_index(0, 0)] == 3);
  CHECK(s.active_unit().player == 0);
}

TEST_CASE("legality: lone mobile worker in the open") {
  auto map = env::load_map(testutil::kTinyDuel);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  const auto& s = e.reset(0);
  const auto& w = s.active_unit();
  auto mask = env::legal_actions(s, w);
  int legal = 0;
  for (bool b : mask) legal += b;
  CHECK(legal == 5);  // noop + 4 moves
  CHECK(mask[0]);
  for (auto d : env::kDirections)
    CHECK(mask[Action::make(ActionKind::Move, d).index]);
}

TEST_CASE("legality: harvest, return, produce and attack preconditions") {
  auto map = env::load_map(testutil::kHarvestMap);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  const auto& s = e.reset(0);
  // worker at (1,0): resource W, base SW (not adjacent), empty E/S
  const auto& w = s.active_unit();
  REQUIRE(w.kind == env::UnitKind::Worker);
  auto mask = env::legal_actions(s, w);
  CHECK(mask[Action::make(ActionKind::Harvest, Direction::W).index]);
  CHECK(!mask[Action::make(ActionKind::Move, Direction::W).index]);  // resource blocks
  CHECK(!mask[Action::make(ActionKind::Move, Direction::N).index]);  // off-map
  CHECK(mask[Action::make(ActionKind::Move, Direction::E).index]);
  CHECK(mask[Action::make(ActionKind::Move, Direction::S).index]);
  // no stockpile: no production anywhere
  for (auto d : env::kDirections) {
    CHECK(!mask[Action::make(ActionKind::Return, d).index]);
    CHECK(!mask[Action::make(ActionKind::ProduceBarracks, d).index]);
  }
  // base with empty stockpile cannot produce
  const env::Unit* base = s.unit_at(0, 1);
  REQUIRE(base != nullptr);
  auto bmask = env::legal_actions(s, *base);
  for (int i = 1; i < env::kActionCount; ++i) CHECK(!bmask[i]);
}

TEST_CASE("harvest moves one resource unit onto the worker") {
  auto map = env::load_map(testutil::kHarvestMap);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  e.reset(0);
  auto r = e.step(Action::make(ActionKind::Harvest, Direction::W));
  CHECK(r.reward == 0.0);
  CHECK(!r.done);
  const auto& s = e.state();
  CHECK(s.resources[map.cell_index(0, 0)] == 2);
  CHECK(s.unit_at(1, 0)->carrying == 1);
  CHECK(testutil::resource_total(s) == 3);  // conserved

  // a carrying worker cannot harvest again
  auto mask = env::legal_actions(s, *s.unit_at(1, 0));
  CHECK(!mask[Action::make(ActionKind::Harvest, Direction::W).index]);
}

TEST_CASE("return deposits into the stockpile next to an own base") {
  auto map = env::load_map(testutil::kHarvestMap);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  e.reset(0);
  // the learner owns two units (worker then base); the base noops each tick
  e.step(Action::make(ActionKind::Harvest, Direction::W));
  e.step(Action::noop());
  e.step(Action::make(ActionKind::Move, Direction::S));  // now at (1,1), base W
  e.step(Action::noop());
  auto mask = env::legal_actions(e.state(), *e.state().unit_at(1, 1));
  CHECK(mask[Action::make(ActionKind::Return, Direction::W).index]);
  e.step(Action::make(ActionKind::Return, Direction::W));
  CHECK(e.state().stockpile[0] == 1);
  CHECK(e.state().unit_at(1, 1)->carrying == 0);
  CHECK(testutil::resource_total(e.state()) == 3);
}

TEST_CASE("production: spawn, cost deduction and blocked-spawn refund") {
  // base with stockpile; both spawn directions free initially
  std::string text =
      "name produce\n"
      "size 4 3\n"
      "stockpile 3\n"
      "maxticks 30\n"
      ". . . .\n"
      "b0 . . w1\n"
      ". . . .\n";
  auto map = env::load_map(text);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  e.reset(0);
  // only learner unit is the base; ProduceWorker E queues and resolves
  auto mask = env::legal_actions(e.state(), e.state().active_unit());
  CHECK(mask[Action::make(ActionKind::ProduceWorker, Direction::E).index]);
  e.step(Action::make(ActionKind::ProduceWorker, Direction::E));
  CHECK(e.state().stockpile[0] == 2);
  REQUIRE(e.state().unit_at(1, 1) != nullptr);
  CHECK(e.state().unit_at(1, 1)->kind == env::UnitKind::Worker);
  CHECK(e.state().unit_at(1, 1)->player == 0);
  CHECK(testutil::resource_total(e.state()) == 6);

  // blocked spawn: the enemy worker walks into the declared cell within the
  // same tick, so the spawn fails at resolution and the cost is refunded
  class MoveWest : public env::AgentInterface {
   public:
    Action act(const env::GameState& st, const env::Unit& u) const override {
      auto m = env::legal_actions(st, u);
      Action a = Action::make(ActionKind::Move, Direction::W);
      return m[a.index] ? a : Action::noop();
    }
  };
  std::string text2 =
      "name produce2\n"
      "size 4 3\n"
      "stockpile 3\n"
      "maxticks 30\n"
      ". . . .\n"
      "b0 . w1 .\n"
      ". . . .\n";
  env::Env e2(env::load_map(text2), std::make_shared<MoveWest>());
  e2.reset(0);
  e2.step(Action::make(ActionKind::ProduceWorker, Direction::E));
  CHECK(e2.state().stockpile[0] == 3);        // refunded after the tick
  CHECK(e2.state().units.size() == 2);        // nothing spawned
  CHECK(e2.state().unit_at(1, 1)->player == 1);  // the blocker moved in
  CHECK(testutil::resource_total(e2.state()) == 6);
}

TEST_CASE("combat: declared attacks land simultaneously at tick end") {
  // two workers adjacent; mutual attacks kill both -> draw
  std::string text =
      "name duel\n"
      "size 3 2\n"
      "stockpile 0\n"
      "maxticks 10\n"
      "w0 w1 .\n"
      ". . .\n";
  auto map = env::load_map(text);

  SUBCASE("mutual worker kills produce a draw") {
    // opponent mirrors the attack
    class Attacker : public env::AgentInterface {
     public:
      Action act(const env::GameState& s, const env::Unit& u) const override {
        auto mask = env::legal_actions(s, u);
        int idx = Action::make(ActionKind::Attack, Direction::W).index;
        return mask[idx] ? Action{idx} : Action::noop();
      }
    };
    env::Env e(map, std::make_shared<Attacker>());
    e.reset(0);
    auto r = e.step(Action::make(ActionKind::Attack, Direction::E));
    CHECK(r.done);
    CHECK(r.terminal == env::Terminal::Draw);
    CHECK(r.reward == 0.0);
    CHECK(e.state().units.empty());
  }

  SUBCASE("one-sided kill wins the game with +1") {
    env::Env e(map, std::make_shared<agents::PassiveAgent>());
    e.reset(0);
    auto r = e.step(Action::make(ActionKind::Attack, Direction::E));
    CHECK(r.done);
    CHECK(r.terminal == env::Terminal::P0Win);
    CHECK(r.reward == 1.0);
  }

  SUBCASE("losing every unit costs -1") {
    class Attacker : public env::AgentInterface {
     public:
      Action act(const env::GameState& s, const env::Unit& u) const override {
        auto mask = env::legal_actions(s, u);
        int idx = Action::make(ActionKind::Attack, Direction::W).index;
        return mask[idx] ? Action{idx} : Action::noop();
      }
    };
    env::Env e(map, std::make_shared<Attacker>());
    e.reset(0);
    auto r = e.step(Action::noop());
    CHECK(r.done);
    CHECK(r.terminal == env::Terminal::P1Win);
    CHECK(r.reward == -1.0);
  }
}

TEST_CASE("multi-hp units survive partial damage") {
  std::string text =
      "name chip\n"
      "size 3 2\n"
      "stockpile 0\n"
      "maxticks 10\n"
      "w0 b1 .\n"
      ". . w1\n";
  auto map = env::load_map(text);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  e.reset(0);
  e.step(Action::make(ActionKind::Attack, Direction::E));
  const env::Unit* base = e.state().unit_at(1, 0);
  REQUIRE(base != nullptr);
  CHECK(base->hp == env::max_hp(env::UnitKind::Base) - 1);
}

TEST_CASE("tick limit forces a draw") {
  auto map = env::load_map(testutil::kTinyDuel);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  e.reset(0);
  env::StepResult r;
  for (int t = 0; t < map.max_ticks; ++t) r = e.step(Action::noop());
  CHECK(r.done);
  CHECK(r.terminal == env::Terminal::Draw);
  CHECK(r.reward == 0.0);
  CHECK(e.state().tick == map.max_ticks);
  CHECK_THROWS_AS(e.step(Action::noop()), std::logic_error);
}

TEST_CASE("illegal actions are rejected") {
  auto map = env::load_map(testutil::kTinyDuel);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  e.reset(0);
  CHECK_THROWS_AS(e.step(Action::make(ActionKind::Harvest, Direction::N)),
                  std::runtime_error);
  CHECK_THROWS_AS(e.step(Action{-1}), std::runtime_error);
  CHECK_THROWS_AS(e.step(Action{999}), std::runtime_error);
}

TEST_CASE("observation layout and contents") {
  auto map = env::load_map(testutil::kHarvestMap);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  const auto& s = e.reset(0);
  const int cells = map.width * map.height;
  auto obs = env::encode_observation(s, 0);
  REQUIRE(static_cast<int>(obs.size()) == env::observation_size(map));
  CHECK(env::observation_size(map) == 11 * cells + 3);

  auto at = [&](int plane, int x, int y) {
    return obs[plane * cells + map.cell_index(x, y)];
  };
  // worker one-hot at (1,0), own-plane set, enemy-plane clear
  CHECK(at(static_cast<int>(env::UnitKind::Worker), 1, 0) == 1.0);
  CHECK(at(4, 1, 0) == 1.0);
  CHECK(at(5, 1, 0) == 0.0);
  // enemy base at (4,4) shows on the opponent plane
  CHECK(at(static_cast<int>(env::UnitKind::Base), 4, 4) == 1.0);
  CHECK(at(5, 4, 4) == 1.0);
  // hp fractions are 1 at reset; resource plane scaled by 10
  CHECK(at(6, 0, 1) == 1.0);
  CHECK(at(8, 0, 0) == doctest::Approx(0.3));
  // active-unit marker on exactly one cell
  double marker_sum = 0.0;
  for (int c = 0; c < cells; ++c) marker_sum += obs[10 * cells + c];
  CHECK(marker_sum == 1.0);
  CHECK(at(10, 1, 0) == 1.0);
  // scalars
  CHECK(obs[11 * cells + 0] == 0.0);
  CHECK(obs[11 * cells + 1] == 0.0);
  CHECK(obs[11 * cells + 2] == 0.0);

  // opponent perspective swaps the ownership planes
  auto obs1 = env::encode_observation(s, 1);
  CHECK(obs1[4 * cells + map.cell_index(1, 0)] == 0.0);
  CHECK(obs1[5 * cells + map.cell_index(1, 0)] == 1.0);
}

TEST_CASE("ascii rendering uses case to distinguish the players") {
  auto map = env::load_map(testutil::kHarvestMap);
  env::Env e(map, std::make_shared<agents::PassiveAgent>());
  e.reset(0);
  auto text = env::render_ascii(e.state());
  CHECK(text.find('w') != std::string::npos);  // P0 worker
  CHECK(text.find('W') != std::string::npos);  // P1 worker
  CHECK(text.find('b') != std::string::npos);
  CHECK(text.find('B') != std::string::npos);
  CHECK(text.find('r') != std::string::npos);
  // 5 columns -> 9 chars + newline per row
  CHECK(text.size() == 5 * 10);
}

TEST_CASE("environment is deterministic and conserves resources") {
  auto map = testutil::load_named_map("basesWorkers8x8A");
  const long long initial_total = [&] {
    long long t = 2LL * map.initial_stockpile;
    for (int a : map.resource_amount) t += a;
    return t;
  }();

  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    env::Env e1(map, std::make_shared<agents::RuleBasedAgent>());
    env::Env e2(map, std::make_shared<agents::RuleBasedAgent>());
    e1.reset(seed);
    e2.reset(seed);
    testutil::RandomRolloutDriver d1(seed), d2(seed);
    for (int i = 0; i < 400; ++i) {
      const auto& s = e1.state();
      // invariants checked on every intermediate state
      CHECK(testutil::resource_total(s) == initial_total);
      std::set<std::pair<int, int>> occupied;
      for (const auto& u : s.units) {
        CHECK(u.hp >= 1);
        CHECK(u.hp <= env::max_hp(u.kind));
        CHECK(s.map->in_bounds(u.x, u.y));
        CHECK(s.map->cells[s.map->cell_index(u.x, u.y)] !=
              env::CellType::Wall);
        CHECK(s.resources[s.map->cell_index(u.x, u.y)] == 0);
        CHECK(occupied.insert({u.x, u.y}).second);
        if (u.kind != env::UnitKind::Worker) CHECK(u.carrying == 0);
      }
      CHECK(s.stockpile[0] >= 0);
      CHECK(s.stockpile[1] >= 0);
      for (size_t c = 0; c < s.resources.size(); ++c) CHECK(s.resources[c] >= 0);

      auto r1 = d1.step(e1);
      auto r2 = d2.step(e2);
      CHECK(r1.reward == r2.reward);
      CHECK(r1.done == r2.done);
      CHECK(state_signature(e1.state()) == state_signature(e2.state()));
      if (r1.done) {
        e1.reset(seed + 100);
        e2.reset(seed + 100);
      }
    }
  }
}

TEST_CASE("games against the scripted opponent always terminate") {
  auto map = testutil::load_named_map("basesWorkers8x8A");
  env::Env e(map, std::make_shared<agents::RuleBasedAgent>());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    e.reset(seed);
    testutil::RandomRolloutDriver d(seed * 7 + 1);
    bool done = false;
    // enough learner steps for max_ticks ticks at any unit count
    for (int i = 0; i < map.max_ticks * 64 && !done; ++i) done = d.step(e).done;
    CHECK(done);
    CHECK(e.state().tick <= map.max_ticks);
  }
}

TEST_CASE("noop is always legal for every live unit") {
  auto map = testutil::load_named_map("TwoBasesBarracks");
  env::Env e(map, std::make_shared<agents::RuleBasedAgent>());
  e.reset(9);
  testutil::RandomRolloutDriver d(9);
  for (int i = 0; i < 300; ++i) {
    for (const auto& u : e.state().units)
      CHECK(env::legal_actions(e.state(), u)[0]);
    if (d.step(e).done) break;
  }
}

TEST_CASE("learner as player 1 sees a mirrored but consistent game") {
  auto map = testutil::load_named_map("basesWorkers8x8A");
  env::Env e(map, std::make_shared<agents::RuleBasedAgent>());
  const auto& s = e.reset(4, /*learner_player=*/1);
  CHECK(s.active_unit().player == 1);
  testutil::RandomRolloutDriver d(4);
  for (int i = 0; i < 200; ++i) {
    CHECK(e.state().active_unit().player == 1);
    if (d.step(e).done) break;
  }
}

TEST_CASE("reward shaping adds harvest, return and production bonuses") {
  auto map = env::load_map(testutil::kHarvestMap);
  env::EnvConfig cfg;
  cfg.reward_shaping = true;
  env::Env e(map, std::make_shared<agents::PassiveAgent>(), cfg);
  e.reset(0);
  auto r = e.step(Action::make(ActionKind::Harvest, Direction::W));
  CHECK(r.reward == doctest::Approx(0.02));
  e.step(Action::noop());                               // the learner's base
  e.step(Action::make(ActionKind::Move, Direction::S));
  e.step(Action::noop());
  r = e.step(Action::make(ActionKind::Return, Direction::W));
  CHECK(r.reward == doctest::Approx(0.02));

  // production bonus lands when the spawn resolves
  std::string text =
      "name produce\n"
      "size 4 3\n"
      "stockpile 3\n"
      "maxticks 30\n"
      ". . . .\n"
      "b0 . . w1\n"
      ". . . .\n";
  env::Env e2(env::load_map(text), std::make_shared<agents::PassiveAgent>(),
              cfg);
  e2.reset(0);
  r = e2.step(Action::make(ActionKind::ProduceWorker, Direction::E));
  CHECK(r.reward == doctest::Approx(0.05));
}
