#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "pursuit/agents.hpp"
#include "pursuit/engine.hpp"
#include "pursuit/map_io.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace pursuit {
namespace {

SensorModel omni(double range) {
  SensorModel s;
  s.fov = kTwoPi;
  s.dist_min = 0.0;
  s.dist_max = range;
  return s;
}

TEST(EscapeGoal, MatchesBruteForce) {
  Rng rng(2024);
  std::uniform_int_distribution<int> side(8, 50);
  int compared = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const int w = side(rng);
    const int h = side(rng);
    const GridMap map = i % 2 == 0 ? testing::random_block_map(w, h, 6, 40 + i) : testing::random_map(w, h, 0.2, 40 + i);
    const Pose pursuer = testing::random_free_pose(map, rng);
    const Pose evader = testing::random_free_pose(map, rng);
    SensorModel sensor;
    sensor.fov = uniform(rng, 0.5, kTwoPi);
    sensor.dist_max = uniform(rng, 1.0, 4.0);
    const auto region = compute_visibility(map, pursuer, sensor);
    const auto expected = testing::brute_escape(map, region, pursuer, evader, 0.5);
    const EscapeGoal got = compute_escape_goal(map, pursuer, evader, sensor);
    if (expected) {
      EXPECT_FALSE(got.fallback) << "instance " << i;
      EXPECT_EQ(got.cell, *expected) << "instance " << i;
      EXPECT_FALSE(region.contains(got.cell));
      EXPECT_TRUE(map.is_free(got.cell));
      ++compared;
    } else {
      EXPECT_TRUE(got.fallback) << "instance " << i;
    }
  }
  EXPECT_GE(compared, 90);
}

TEST(EscapeGoal, CandidateCostsAreConsistent) {
  const GridMap map = testing::random_block_map(30, 30, 6, 5);
  Rng rng(5);
  const Pose pursuer = testing::random_free_pose(map, rng);
  const Pose evader = testing::random_free_pose(map, rng);
  const auto region = compute_visibility(map, pursuer, SensorModel{});
  const NavGrid nav(map, 0.0);
  for (const auto& c : escape_candidates(nav, region, pursuer, evader, {})) {
    EXPECT_GT(c.cost_dist, 0.0);
    EXPECT_EQ(c.cost_escape, c.cost_effort / c.cost_dist);
    EXPECT_GE(distance(map.cell_to_world(c.cell), evader.position()), 0.5);
  }
}

TEST(EscapeGoal, SingleHiddenCell) {
  const GridMap map = load_map("resolution 1.0\n########\n#......#\n########\n");
  const Pose pursuer{1.5, 1.5, 0.0};
  const auto region = compute_visibility(map, pursuer, omni(4.4));
  ASSERT_EQ(region.cells().size(), 5u);
  const EscapeGoal g = compute_escape_goal(map, pursuer, Pose{2.5, 1.5, 0.0}, omni(4.4));
  EXPECT_FALSE(g.fallback);
  EXPECT_EQ(g.cell, (Cell{1, 6}));
}

TEST(EscapeGoal, PicksTheWallShadow) {
  const GridMap map = load_map(
      "resolution 0.5\n"
      "#######\n"
      "#.....#\n"
      "#.....#\n"
      "#..#..#\n"
      "#..#..#\n"
      "#.....#\n"
      "#######\n");
  const Pose pursuer{0.75, 1.75, 0.0};
  const Pose evader{2.75, 0.75, 0.0};
  const SensorModel sensor = omni(100.0);
  const auto region = compute_visibility(map, pursuer, sensor);
  const EscapeGoal g = compute_escape_goal(map, pursuer, evader, sensor);
  ASSERT_FALSE(g.fallback);
  EXPECT_EQ(g.cell, *testing::brute_escape(map, region, pursuer, evader, 0.5));
  EXPECT_FALSE(line_of_sight(map, pursuer.position(), map.cell_to_world(g.cell)));
  EXPECT_GE(g.cell.col, 4);
}

TEST(EscapeGoal, OmniscientPursuerFallsBackToFarthestCell) {
  const GridMap map = GridMap::empty(30, 20, 0.1);
  const Pose pursuer{0.25, 0.25, 0.0};
  const EscapeGoal g = compute_escape_goal(map, pursuer, Pose{1.0, 1.0, 0.0}, omni(1e6));
  EXPECT_TRUE(g.fallback);
  EXPECT_EQ(g.cell, (Cell{19, 29}));
}

TEST(EscapeGoal, EvaderMustBeFree) {
  const GridMap map = load_map("...\n.#.\n...\n");
  EXPECT_THROW(compute_escape_goal(map, Pose{0.05, 0.05, 0.0}, Pose{0.15, 0.15, 0.0}, SensorModel{}),
               InvalidPoseError);
}

struct PolicyHarness {
  const GridMap& map;
  NavGrid nav;
  SensorModel sensor;
  PolicyHarness(const GridMap& m, double radius, SensorModel s = {}) : map(m), nav(m, radius), sensor(s) {}
};

TEST(SmartEvader, HoldsWhenSafe) {
  const GridMap map = testing::random_block_map(150, 150, 20, 8);
  PolicyHarness h(map, 0.2);
  SmartEvaderPolicy policy({Role::kEvader, Behavior::kSmart, 0.4, 0.2}, PolicyParams{});
  Rng rng(8);
  int checked = 0;
  for (int i = 0; i < 200 && checked < 30; ++i) {
    const Pose pursuer = testing::random_free_pose(map, rng);
    const Pose evader = testing::random_free_pose(map, rng);
    const auto region = compute_visibility(map, pursuer, h.sensor);
    if (region.contains(evader.position()) || distance(pursuer.position(), evader.position()) <= 8.0) continue;
    const Decision d = policy.decide(WorldView{map, h.nav, h.sensor, 1, evader, pursuer, region});
    EXPECT_EQ(d.cmd, ControlCommand{});
    ++checked;
  }
  EXPECT_GE(checked, 5);
}

TEST(SmartEvader, SafeEvaderMovesAtMostOneStepPerTick) {
  const GridMap& map = builtin_map("brick_room");
  PolicyHarness h(map, 0.2);
  SmartEvaderPolicy policy({Role::kEvader, Behavior::kSmart, 0.4, 0.2}, PolicyParams{});
  Rng rng(3);
  Pose evader;
  do {
    evader = testing::random_free_pose(map, rng);
  } while (disc_collides(map, evader.position(), 0.2));
  const Pose pursuer = testing::random_free_pose(map, rng);
  const auto region = compute_visibility(map, pursuer, h.sensor);
  for (int k = 1; k <= 30; ++k) {
    const Decision d = policy.decide(WorldView{map, h.nav, h.sensor, k, evader, pursuer, region});
    EXPECT_LE(std::abs(d.cmd.v), 0.4 + 1e-12);
    const Pose next = step_unicycle(evader, d.cmd, 1.0, map, 0.2);
    EXPECT_LE(distance(evader.position(), next.position()), 0.4 + 1e-12);
    evader = next;
  }
}

TEST(SmartEvader, DucksBehindBrickPillar) {
  // Evader just east of the upper-left pillar, slower pursuer 1.5 m further east looking at it.
  const GridMap& map = builtin_map("brick_room");
  PolicyHarness h(map, 0.2);
  PolicyParams params;
  params.filter.v_max = 0.4;
  SmartEvaderPolicy evader_policy({Role::kEvader, Behavior::kSmart, 0.4, 0.2}, params);
  SmartPursuerPolicy pursuer_policy({Role::kPursuer, Behavior::kSmart, 0.2, 0.2}, params, 5);
  Pose evader{2.15, 1.85, 0.0};
  Pose pursuer{3.65, 1.85, kPi};
  ASSERT_TRUE(is_detected(map, pursuer, evader, h.sensor));
  bool escaped = false;
  for (int k = 1; k <= 20 && !escaped; ++k) {
    const auto region = compute_visibility(map, pursuer, h.sensor);
    evader = step_unicycle(evader, evader_policy.decide(WorldView{map, h.nav, h.sensor, k, evader, pursuer, region}).cmd,
                           1.0, map, 0.2);
    std::optional<Pose> seen;
    if (is_detected(map, pursuer, evader, h.sensor)) seen = evader;
    pursuer = step_unicycle(pursuer, pursuer_policy.decide(WorldView{map, h.nav, h.sensor, k, pursuer, seen, region}).cmd,
                            1.0, map, 0.2);
    escaped = !compute_visibility(map, pursuer, h.sensor).contains(evader.position());
  }
  EXPECT_TRUE(escaped);
}

TEST(SmartEvader, UsuallyLeavesTheViewInBrickRoom) {
  // Spawns always start with the evader in view; the greedy goal only sometimes beats a
  // pursuer that re-centres by turning, so this is a rate, not a guarantee.
  int escaped = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    GameConfig cfg;
    cfg.map_id = "brick_room";
    cfg.speed_ratio = 0.5;
    cfg.evader_behavior = Behavior::kSmart;
    cfg.seed = seed;
    Game game(cfg);
    bool out = false;
    for (int k = 0; k < 20 && !out; ++k) {
      game.step();
      out = !game.pursuer_region().contains(game.evader().position());
    }
    escaped += out ? 1 : 0;
  }
  EXPECT_GE(escaped, 70);
}

std::vector<Cell> random_walk_waypoints(std::uint64_t seed, int ticks) {
  const GridMap& map = builtin_map("complex_hall");
  PolicyHarness h(map, 0.2);
  RandomPolicy policy({Role::kEvader, Behavior::kRandom, 0.4, 0.2}, PolicyParams{}, Rng(seed));
  Pose self{4.0, 4.0, 0.0};
  const auto region = compute_visibility(map, Pose{0.5, 0.5, 0.0}, h.sensor);
  for (int k = 1; k <= ticks; ++k) {
    const Decision d = policy.decide(WorldView{map, h.nav, h.sensor, k, self, std::nullopt, region});
    EXPECT_LE(std::abs(d.cmd.v), 0.4 + 1e-12);
    self = step_unicycle(self, d.cmd, 1.0, map, 0.2);
  }
  return policy.waypoint_history();
}

TEST(RandomPolicy, SeedDeterminesWaypoints) {
  EXPECT_EQ(random_walk_waypoints(11, 90), random_walk_waypoints(11, 90));
  EXPECT_NE(random_walk_waypoints(11, 90), random_walk_waypoints(12, 90));
}

TEST(RandomPolicy, WandersBetweenFreeWaypoints) {
  const GridMap& map = builtin_map("complex_hall");
  const NavGrid nav(map, 0.2);
  int total = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto wps = random_walk_waypoints(seed, 90);
    const std::set<Cell> distinct(wps.begin(), wps.end());
    EXPECT_GE(distinct.size(), 3u) << "seed " << seed;
    for (const Cell& c : wps) EXPECT_TRUE(map.is_free(c) && nav.passable(c));
    total += static_cast<int>(wps.size());
  }
  EXPECT_GE(total, 40 * 3);
}

TEST(SmartPursuer, StillWhenCentredAtStandoff) {
  const GridMap map = GridMap::empty(80, 80, 0.1);
  PolicyHarness h(map, 0.2);
  SmartPursuerPolicy policy({Role::kPursuer, Behavior::kSmart, 0.4, 0.2}, PolicyParams{}, 1);
  const Pose self{2.0, 4.0, 0.0};
  const Pose evader{3.5, 4.0, 0.0};
  const auto region = compute_visibility(map, self, h.sensor);
  const Decision d = policy.decide(WorldView{map, h.nav, h.sensor, 1, self, evader, region});
  EXPECT_EQ(d.mode, PursuerMode::kReactive);
  EXPECT_NEAR(d.cmd.v, 0.0, 1e-12);
  EXPECT_NEAR(d.cmd.omega, 0.0, 1e-12);
}

TEST(SmartPursuer, NeverSeeingMeansEstimateMode) {
  const GridMap& map = builtin_map("enclosed_room");
  PolicyHarness h(map, 0.2);
  PolicyParams params;
  params.filter.v_max = 0.4;
  SmartPursuerPolicy policy({Role::kPursuer, Behavior::kSmart, 0.4, 0.2}, params, 4);
  Rng rng(4);
  Pose self;
  do {
    self = testing::random_free_pose(map, rng);
  } while (disc_collides(map, self.position(), 0.2));
  for (int k = 1; k <= 30; ++k) {
    const auto region = compute_visibility(map, self, h.sensor);
    const Decision d = policy.decide(WorldView{map, h.nav, h.sensor, k, self, std::nullopt, region});
    EXPECT_EQ(d.mode, PursuerMode::kEstimate);
    EXPECT_TRUE(d.estimate.has_value());
    EXPECT_LE(std::abs(d.cmd.v), 0.4 + 1e-12);
    self = step_unicycle(self, d.cmd, 1.0, map, 0.2);
  }
}

TEST(SmartPursuer, EstimateFollowsEvaderAroundCorner) {
  // L-shaped free space: a bottom band plus a left band going up.
  std::vector<std::uint8_t> occ(60 * 60, 0);
  for (int r = 0; r < 60; ++r) {
    for (int c = 0; c < 60; ++c) {
      const bool border = r == 0 || c == 0 || r == 59 || c == 59;
      const bool block = r <= 30 && c >= 20;
      occ[static_cast<std::size_t>(r * 60 + c)] = border || block ? 1 : 0;
    }
  }
  const GridMap map(60, 60, 0.1, {}, occ);
  PolicyHarness h(map, 0.2);
  PolicyParams params;
  params.filter.v_max = 0.4;
  SmartPursuerPolicy policy({Role::kPursuer, Behavior::kSmart, 0.2, 0.2}, params, 9);

  // Evader heads west along the band, then north up the left arm.
  std::vector<Pose> path;
  for (double x = 3.0; x > 1.0 + 1e-9; x -= 0.4) path.push_back({x, 4.5, kPi});
  for (double y = 4.5; y > 0.5; y -= 0.4) path.push_back({1.0, y, -kPi / 2.0});

  Pose self{5.2, 4.5, kPi};
  std::optional<int> lost_at;
  bool close = false;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const Pose& evader = path[k];
    const auto region = compute_visibility(map, self, h.sensor);
    std::optional<Pose> seen;
    if (is_detected(map, self, evader, h.sensor)) seen = evader;
    const Decision d = policy.decide(WorldView{map, h.nav, h.sensor, static_cast<int>(k) + 1, self, seen, region});
    if (!seen && !lost_at) lost_at = static_cast<int>(k);
    if (lost_at && static_cast<int>(k) < *lost_at + 5 && d.estimate) {
      close = close || distance(d.estimate->position(), evader.position()) <= 1.0;
    }
    self = step_unicycle(self, d.cmd, 1.0, map, 0.2);
  }
  ASSERT_TRUE(lost_at.has_value());
  EXPECT_TRUE(close);
}

TEST(ScriptedPolicy, ReplaysThenHolds) {
  const GridMap map = GridMap::empty(10, 10, 0.1);
  PolicyHarness h(map, 0.0);
  ScriptedPolicy p({{0.1, 0.2}, {0.3, 0.0}});
  const auto region = compute_visibility(map, Pose{0.5, 0.5, 0.0}, h.sensor);
  auto at = [&](int k) { return p.decide(WorldView{map, h.nav, h.sensor, k, Pose{0.5, 0.5, 0.0}, std::nullopt, region}).cmd; };
  EXPECT_EQ(at(1), (ControlCommand{0.1, 0.2}));
  EXPECT_EQ(at(2), (ControlCommand{0.3, 0.0}));
  EXPECT_EQ(at(3), ControlCommand{});
}

TEST(Names, RoundTrip) {
  EXPECT_EQ(parse_behavior("smart"), Behavior::kSmart);
  EXPECT_EQ(parse_behavior(to_string(Behavior::kRandom)), Behavior::kRandom);
  EXPECT_THROW(parse_behavior("clever"), std::invalid_argument);
  for (auto m : {PursuerMode::kReactive, PursuerMode::kEstimate, PursuerMode::kRandom, PursuerMode::kExternal}) {
    EXPECT_EQ(parse_pursuer_mode(to_string(m)), m);
  }
}

}  // namespace
}  // namespace pursuit
