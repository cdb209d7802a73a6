#include "pursuit/agents.hpp"

#include <algorithm>
#include <limits>

namespace pursuit {

std::string_view to_string(Role role) { return role == Role::kPursuer ? "pursuer" : "evader"; }

std::string_view to_string(Behavior behavior) { return behavior == Behavior::kSmart ? "smart" : "random"; }

Behavior parse_behavior(std::string_view text) {
  if (text == "smart") return Behavior::kSmart;
  if (text == "random") return Behavior::kRandom;
  throw std::invalid_argument("unknown behavior '" + std::string(text) + "' (expected random or smart)");
}

Role parse_role(std::string_view text) {
  if (text == "pursuer") return Role::kPursuer;
  if (text == "evader") return Role::kEvader;
  throw std::invalid_argument("unknown role '" + std::string(text) + "'");
}

std::string_view to_string(PursuerMode mode) {
  switch (mode) {
    case PursuerMode::kReactive: return "reactive";
    case PursuerMode::kEstimate: return "estimate";
    case PursuerMode::kRandom: return "random";
    case PursuerMode::kExternal: return "external";
  }
  return "external";
}

PursuerMode parse_pursuer_mode(std::string_view text) {
  if (text == "reactive") return PursuerMode::kReactive;
  if (text == "estimate") return PursuerMode::kEstimate;
  if (text == "random") return PursuerMode::kRandom;
  if (text == "external") return PursuerMode::kExternal;
  throw std::invalid_argument("unknown pursuer mode '" + std::string(text) + "'");
}

std::vector<EscapeCandidate> escape_candidates(const NavGrid& nav, const VisibilityRegion& region,
                                               const Pose& pursuer, const Pose& evader,
                                               const EscapeConfig& config) {
  const GridMap& map = nav.map();
  std::vector<EscapeCandidate> out;
  std::optional<Cell> source = map.try_world_to_cell(evader.position());
  if (!source || !nav.passable(*source)) {
    source = nav.nearest_passable(evader.position());
  }
  if (!source) {
    return out;
  }
  const auto effort = grid_distances(nav, *source);
  const int stride = std::max(1, config.stride);
  long ordinal = 0;
  for (std::size_t i = 0; i < map.cell_count(); ++i) {
    if (map.occupancy()[i] != 0) continue;
    const Cell c = map.cell_at(i);
    if (region.contains(c)) continue;
    const Point2 centre = map.cell_to_world(c);
    if (distance(centre, evader.position()) < config.r_exclude) continue;
    if (ordinal++ % stride != 0) continue;
    if (!effort[i]) continue;
    const double cost_dist = distance(pursuer.position(), centre);
    if (!(cost_dist > 0.0)) continue;
    const double cost_effort = effort[i]->value() * map.resolution();
    out.push_back({c, cost_effort, cost_dist, cost_effort / cost_dist});
  }
  return out;
}

EscapeGoal compute_escape_goal(const NavGrid& nav, const VisibilityRegion& region, const Pose& pursuer,
                               const Pose& evader, const EscapeConfig& config) {
  const auto candidates = escape_candidates(nav, region, pursuer, evader, config);
  if (!candidates.empty()) {
    const EscapeCandidate* best = &candidates.front();
    for (const auto& c : candidates) {
      if (c.cost_escape < best->cost_escape) {
        best = &c;
      }
    }
    return EscapeGoal{best->cell, false, *best};
  }
  const GridMap& map = nav.map();
  std::optional<Cell> farthest;
  double best_d = -1.0;
  for (const Cell& c : map.free_cells()) {
    const double d = distance(pursuer.position(), map.cell_to_world(c));
    if (d > best_d) {
      best_d = d;
      farthest = c;
    }
  }
  if (!farthest) {
    throw InvalidPoseError("map has no free space");
  }
  return EscapeGoal{*farthest, true, std::nullopt};
}

EscapeGoal compute_escape_goal(const GridMap& map, const Pose& pursuer, const Pose& evader,
                               const SensorModel& sensor, const EscapeConfig& config) {
  if (!map.is_free(evader.position())) {
    throw InvalidPoseError("evader pose is not in free space");
  }
  const NavGrid nav(map, config.inflation_radius);
  const auto region = compute_visibility(map, pursuer, sensor);
  return compute_escape_goal(nav, region, pursuer, evader, config);
}

std::optional<Path> plan_snapped(const NavGrid& nav, Point2 start, Point2 goal) {
  const GridMap& map = nav.map();
  auto snap = [&](Point2 p) -> std::optional<Cell> {
    auto c = map.try_world_to_cell(p);
    if (c && nav.passable(*c)) return c;
    return nav.nearest_passable(p);
  };
  const auto s = snap(start);
  const auto g = snap(goal);
  if (!s || !g) return std::nullopt;
  try {
    return plan_path(nav, map.cell_to_world(*s), map.cell_to_world(*g));
  } catch (const NoPathError&) {
    return std::nullopt;
  }
}

FollowConfig follow_config(const PolicyParams& params, const GridMap& map, double radius, double v_max) {
  FollowConfig cfg;
  cfg.lookahead = std::max(params.lookahead, v_max * params.dt);
  cfg.k_omega = params.k_omega;
  cfg.omega_max = params.omega_max;
  cfg.map = &map;
  cfg.radius = radius;
  return cfg;
}

// ---------------------------------------------------------------------------------------------

RandomPolicy::RandomPolicy(AgentSpec spec, PolicyParams params, Rng rng)
    : spec_(spec), params_(std::move(params)), rng_(rng) {}

void RandomPolicy::pick_waypoint(const WorldView& view) {
  const GridMap& map = view.map;
  std::vector<Cell> pool;
  for (std::size_t i = 0; i < map.cell_count(); ++i) {
    const Cell c = map.cell_at(i);
    if (view.nav.passable(c)) pool.push_back(c);
  }
  path_.reset();
  if (pool.empty()) return;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int attempt = 0; attempt < 10 && !path_; ++attempt) {
    const Cell target = pool[pick(rng_)];
    path_ = plan_snapped(view.nav, view.self.position(), map.cell_to_world(target));
    if (path_) {
      history_.push_back(target);
    }
  }
  best_distance_ = path_ ? distance(view.self.position(), path_->waypoints.back())
                         : std::numeric_limits<double>::infinity();
  ticks_without_progress_ = 0;
}

Decision RandomPolicy::decide(const WorldView& view) {
  const PursuerMode mode = spec_.role == Role::kPursuer ? PursuerMode::kRandom : PursuerMode::kExternal;
  const Point2 here = view.self.position();
  if (!path_ || distance(here, path_->waypoints.back()) <= params_.arrival_tolerance ||
      ticks_without_progress_ >= params_.stall_ticks) {
    pick_waypoint(view);
  }
  if (!path_) {
    return {{}, mode, std::nullopt};
  }
  const double d = distance(here, path_->waypoints.back());
  if (d < best_distance_ - 1e-9) {
    best_distance_ = d;
    ticks_without_progress_ = 0;
  } else {
    ++ticks_without_progress_;
  }
  const auto cfg = follow_config(params_, view.map, spec_.radius, spec_.v_max);
  return {follow_path(view.self, *path_, spec_.v_max, params_.dt, cfg), mode, std::nullopt};
}

// ---------------------------------------------------------------------------------------------

SmartEvaderPolicy::SmartEvaderPolicy(AgentSpec spec, PolicyParams params)
    : spec_(spec), params_(std::move(params)) {}

Decision SmartEvaderPolicy::decide(const WorldView& view) {
  if (!view.opponent) {
    throw ContractError("the smart evader needs the pursuer pose");
  }
  const Pose& pursuer = *view.opponent;
  const bool seen = view.pursuer_region.contains(view.self.position());
  if (!seen && distance(pursuer.position(), view.self.position()) > params_.d_safe) {
    goal_.reset();
    return {};
  }
  goal_ = compute_escape_goal(view.nav, view.pursuer_region, pursuer, view.self, params_.escape);
  const auto path = plan_snapped(view.nav, view.self.position(), view.map.cell_to_world(goal_->cell));
  if (!path) {
    return {};
  }
  const auto cfg = follow_config(params_, view.map, spec_.radius, spec_.v_max);
  return {follow_path(view.self, *path, spec_.v_max, params_.dt, cfg), PursuerMode::kExternal, std::nullopt};
}

// ---------------------------------------------------------------------------------------------

SmartPursuerPolicy::SmartPursuerPolicy(AgentSpec spec, PolicyParams params, std::uint64_t filter_seed)
    : spec_(spec), params_(std::move(params)), seed_source_(filter_seed) {}

void SmartPursuerPolicy::begin(const WorldView& view) {
  if (view.opponent) {
    filter_ = ParticleSet::initialize_around(view.map, *view.opponent, params_.filter, seed_source_());
  } else {
    filter_ = ParticleSet::initialize_uniform(view.map, params_.filter, seed_source_());
  }
}

Decision SmartPursuerPolicy::decide(const WorldView& view) {
  if (!filter_) {
    begin(view);
  }
  if (view.opponent) {
    const auto obs = project_to_image(view.map, view.self, *view.opponent, view.sensor,
                                      params_.image_width, params_.target_radius);
    const ReactiveGains gains{params_.k_omega_image, params_.k_v, params_.omega_max};
    const auto cmd = reactive_control(obs, spec_.v_max, params_.standoff, gains);
    filter_->reinitialize_around(view.map, *view.opponent, params_.filter);
    path_.reset();
    goal_cell_.reset();
    return {cmd, PursuerMode::kReactive, std::nullopt};
  }
  return chase_estimate(view);
}

Decision SmartPursuerPolicy::chase_estimate(const WorldView& view) {
  const GridMap& map = view.map;
  filter_->predict(params_.dt, map, params_.filter);
  filter_->update_weights(map, view.pursuer_region, false, params_.filter);
  filter_->maybe_resample(params_.filter);
  const Pose estimate = filter_->estimate();

  std::optional<Cell> goal = map.try_world_to_cell(estimate.position());
  if (!goal || !view.nav.passable(*goal)) {
    goal = view.nav.nearest_passable(estimate.position());
  }
  if (!goal) {
    return {{}, PursuerMode::kEstimate, estimate};
  }
  if (!path_ || goal_cell_ != goal) {
    goal_cell_ = goal;
    path_ = plan_snapped(view.nav, view.self.position(), map.cell_to_world(*goal));
    if (!path_) {
      // Unreachable estimate: head for the reachable cell closest to it.
      auto start = map.try_world_to_cell(view.self.position());
      if (!start || !view.nav.passable(*start)) start = view.nav.nearest_passable(view.self.position());
      if (start) {
        const auto reach = grid_distances(view.nav, *start);
        std::optional<Cell> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < reach.size(); ++i) {
          if (!reach[i]) continue;
          const double d = distance(map.cell_to_world(map.cell_at(i)), estimate.position());
          if (d < best_d) {
            best_d = d;
            best = map.cell_at(i);
          }
        }
        if (best) {
          path_ = plan_snapped(view.nav, view.self.position(), map.cell_to_world(*best));
        }
      }
    }
  }
  if (!path_) {
    return {{}, PursuerMode::kEstimate, estimate};
  }
  const auto cfg = follow_config(params_, map, spec_.radius, spec_.v_max);
  return {follow_path(view.self, *path_, spec_.v_max, params_.dt, cfg), PursuerMode::kEstimate, estimate};
}

// ---------------------------------------------------------------------------------------------

ScriptedPolicy::ScriptedPolicy(std::vector<ControlCommand> commands, PursuerMode mode)
    : commands_(std::move(commands)), mode_(mode) {}

Decision ScriptedPolicy::decide(const WorldView& view) {
  const auto k = static_cast<std::size_t>(std::max(view.tick, 1) - 1);
  return {k < commands_.size() ? commands_[k] : ControlCommand{}, mode_, std::nullopt};
}

ControlCommand GoalSeeker::command(const WorldView& view, double v_max, const PolicyParams& params, double radius) {
  if (!goal_) return {};
  if (!path_) {
    path_ = plan_snapped(view.nav, view.self.position(), *goal_);
    if (!path_) {
      clear();
      return {};
    }
  }
  const auto cfg = follow_config(params, view.map, radius, v_max);
  const auto cmd = follow_path(view.self, *path_, v_max, params.dt, cfg);
  if (cmd == ControlCommand{}) {
    clear();
  }
  return cmd;
}

}  // namespace pursuit
