#include "pursuit/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "pursuit/map_io.hpp"
#include "pursuit/serialization.hpp"

namespace pursuit {

namespace {

constexpr int kMaxSpawnAttempts = 10000;

ControlCommand clamp_command(ControlCommand cmd, double v_max, double omega_max) {
  return {std::clamp(cmd.v, -v_max, v_max), std::clamp(cmd.omega, -omega_max, omega_max)};
}

Pose random_free_pose(const GridMap& map, const std::vector<Cell>& free, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  const Point2 c = map.cell_to_world(free[pick(rng)]);
  const double half = map.resolution() / 2.0;
  return {c.x + uniform(rng, -half, half), c.y + uniform(rng, -half, half),
          normalize_angle(uniform(rng, -kPi, kPi))};
}

}  // namespace

int GameConfig::tick_count() const { return static_cast<int>(std::floor(t_max / dt + 1e-9)); }

void GameConfig::validate() const {
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(v_e > 0.0)) throw std::invalid_argument("v_e must be positive");
  if (!(speed_ratio > 0.0)) throw std::invalid_argument("speed_ratio must be positive");
  if (!(agent_radius >= 0.0)) throw std::invalid_argument("agent_radius must be non-negative");
  if (!(detection_failure_prob >= 0.0 && detection_failure_prob <= 1.0)) {
    throw std::invalid_argument("detection_failure_prob must lie in [0, 1]");
  }
  sensor.validate();
  filter.validate();
}

std::shared_ptr<const GridMap> resolve_map(const GameConfig& config) {
  if (!config.map_document.empty()) {
    auto map = std::make_shared<const GridMap>(load_map(config.map_document));
    if (!is_connected(*map)) throw MapFormatError("episode map free space is not connected");
    return map;
  }
  for (const auto& named : builtin_maps()) {
    if (named.name == config.map_id) {
      // Builtins live for the whole program; alias without owning.
      return std::shared_ptr<const GridMap>(std::shared_ptr<const GridMap>{}, &named.map);
    }
  }
  static std::mutex cache_mutex;
  static std::map<std::string, std::shared_ptr<const GridMap>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[config.map_id];
  if (!slot) {
    auto map = std::make_shared<const GridMap>(load_map_file(config.map_id));
    if (!is_connected(*map)) throw MapFormatError("episode map free space is not connected");
    slot = std::move(map);
  }
  return slot;
}

std::pair<Pose, Pose> spawn(const GridMap& map, const SensorModel& sensor, double radius, Rng& rng) {
  const auto free = map.free_cells();
  if (free.empty()) {
    throw SpawnError("map has no free space");
  }
  for (int attempt = 0; attempt < kMaxSpawnAttempts; ++attempt) {
    const Pose pursuer = random_free_pose(map, free, rng);
    const Pose evader = random_free_pose(map, free, rng);
    if (disc_collides(map, pursuer.position(), radius) || disc_collides(map, evader.position(), radius)) {
      continue;
    }
    if (distance(pursuer.position(), evader.position()) < 2.0 * radius) {
      continue;
    }
    if (is_detected(map, pursuer, evader, sensor)) {
      return {pursuer, evader};
    }
  }
  throw SpawnError("no valid spawn found in 10000 attempts; map and sensor are incompatible");
}

std::unique_ptr<Policy> make_policy(const GameConfig& config, Role role) {
  PolicyParams params = config.policy;
  params.dt = config.dt;
  params.filter = config.filter;
  params.filter.v_max = config.v_e;
  const Behavior behavior = role == Role::kPursuer ? config.pursuer_behavior : config.evader_behavior;
  const AgentSpec spec{role, behavior, role == Role::kPursuer ? config.v_p() : config.v_e, config.agent_radius};
  if (behavior == Behavior::kRandom) {
    return std::make_unique<RandomPolicy>(
        spec, params, make_stream(config.seed, role == Role::kPursuer ? "pursuer-policy" : "evader-policy"));
  }
  if (role == Role::kPursuer) {
    return std::make_unique<SmartPursuerPolicy>(spec, params, derive_seed(config.seed, "filter"));
  }
  return std::make_unique<SmartEvaderPolicy>(spec, params);
}

Game::Game(GameConfig config, PolicyOverrides overrides)
    : Game(config, resolve_map(config), std::move(overrides)) {}

Game::Game(GameConfig config, std::shared_ptr<const GridMap> map, PolicyOverrides overrides)
    : config_(std::move(config)), map_(std::move(map)), nav_(*map_, config_.agent_radius),
      perception_rng_(make_stream(config_.seed, "perception")) {
  config_.validate();
  Rng spawn_rng = make_stream(config_.seed, "spawn");
  std::tie(pursuer_, evader_) = spawn(*map_, config_.sensor, config_.agent_radius, spawn_rng);
  pursuer_start_ = pursuer_;
  evader_start_ = evader_;
  pursuer_policy_ = overrides.pursuer ? overrides.pursuer(config_) : make_policy(config_, Role::kPursuer);
  evader_policy_ = overrides.evader ? overrides.evader(config_) : make_policy(config_, Role::kEvader);
  digest_ = config_digest(config_);
  records_.reserve(static_cast<std::size_t>(config_.tick_count()));
  begin();
}

void Game::begin() {
  const auto region = pursuer_region();
  evader_policy_->begin(WorldView{*map_, nav_, config_.sensor, 0, evader_, pursuer_, region});
  std::optional<Pose> seen;
  if (is_detected(*map_, pursuer_, evader_, config_.sensor)) seen = evader_;
  pursuer_policy_->begin(WorldView{*map_, nav_, config_.sensor, 0, pursuer_, seen, region});
}

VisibilityRegion Game::pursuer_region() const {
  return compute_visibility(*map_, pursuer_, config_.sensor);
}

double Game::success_rate_so_far() const {
  return tick_ == 0 ? 0.0 : static_cast<double>(detected_ticks_) / static_cast<double>(tick_);
}

void Game::set_evader_pose(const Pose& pose) {
  if (!map_->is_free(pose.position())) {
    throw InvalidPoseError("evader pose is not in free space");
  }
  evader_ = pose;
}

const TickRecord& Game::step() {
  if (finished()) {
    throw ContractError("step called on a finished game");
  }
  const int k = tick_ + 1;
  const double omega_max = config_.policy.omega_max;
  const double two_r = 2.0 * config_.agent_radius;
  const auto region = pursuer_region();

  // Evader first, with full knowledge of the pursuer pose.
  const Decision evader_move =
      evader_policy_->decide(WorldView{*map_, nav_, config_.sensor, k, evader_, pursuer_, region});
  Pose next = step_unicycle(evader_, clamp_command(evader_move.cmd, config_.v_e, omega_max), config_.dt,
                            *map_, config_.agent_radius);
  if (distance(next.position(), pursuer_.position()) < two_r) {
    next.x = evader_.x;
    next.y = evader_.y;
  }
  evader_ = next;

  // Pursuer observes the moved evader.
  bool seen = is_detected(*map_, pursuer_, evader_, config_.sensor);
  if (seen && config_.detection_failure_prob > 0.0 &&
      uniform(perception_rng_, 0.0, 1.0) < config_.detection_failure_prob) {
    seen = false;
  }
  std::optional<Pose> sighting;
  if (seen) sighting = evader_;
  const Decision pursuer_move =
      pursuer_policy_->decide(WorldView{*map_, nav_, config_.sensor, k, pursuer_, sighting, region});
  next = step_unicycle(pursuer_, clamp_command(pursuer_move.cmd, config_.v_p(), omega_max), config_.dt,
                       *map_, config_.agent_radius);
  if (distance(next.position(), evader_.position()) < two_r) {
    next.x = pursuer_.x;
    next.y = pursuer_.y;
  }
  pursuer_ = next;

  const bool detected = is_detected(*map_, pursuer_, evader_, config_.sensor);
  detected_ticks_ += detected ? 1 : 0;
  tick_ = k;
  records_.push_back(TickRecord{k, pursuer_, evader_, detected, pursuer_move.mode, pursuer_move.estimate});
  return records_.back();
}

EpisodeResult Game::result() const {
  EpisodeResult r;
  r.map_id = config_.map_document.empty() ? config_.map_id : std::string("inline");
  r.seed = config_.seed;
  r.config_digest = digest_;
  r.pursuer_start = pursuer_start_;
  r.evader_start = evader_start_;
  r.ticks = records_;
  r.detected_ticks = detected_ticks_;
  const int total = config_.tick_count();
  r.success_rate = total > 0 ? static_cast<double>(detected_ticks_) / static_cast<double>(total) : 0.0;
  return r;
}

EpisodeResult run_episode(const GameConfig& config, const PolicyOverrides& overrides) {
  return run_episode(config, resolve_map(config), overrides);
}

EpisodeResult run_episode(const GameConfig& config, std::shared_ptr<const GridMap> map,
                          const PolicyOverrides& overrides) {
  Game game(config, std::move(map), overrides);
  while (!game.finished()) {
    game.step();
  }
  return game.result();
}

}  // namespace pursuit
