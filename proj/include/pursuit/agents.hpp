#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pursuit/navigation.hpp"
#include "pursuit/particle_filter.hpp"
#include "pursuit/rng.hpp"
#include "pursuit/visibility.hpp"

namespace pursuit {

enum class Role { kPursuer, kEvader };
enum class Behavior { kRandom, kSmart };

std::string_view to_string(Role role);
std::string_view to_string(Behavior behavior);
/// Accepts "random" and "smart"; throws std::invalid_argument otherwise.
Behavior parse_behavior(std::string_view text);
Role parse_role(std::string_view text);

struct AgentSpec {
  Role role = Role::kPursuer;
  Behavior behavior = Behavior::kSmart;
  double v_max = 0.4;
  double radius = 0.2;
};

/// What drove the pursuer's command on a tick.
enum class PursuerMode { kReactive, kEstimate, kRandom, kExternal };
std::string_view to_string(PursuerMode mode);
PursuerMode parse_pursuer_mode(std::string_view text);

struct EscapeConfig {
  double r_exclude = 0.5;
  int stride = 1;
  /// Inflation of the grid on which the evader's travel effort is measured.
  double inflation_radius = 0.0;
};

struct EscapeCandidate {
  Cell cell;
  double cost_effort = 0.0;  // metres of grid travel from the evader
  double cost_dist = 0.0;    // straight-line metres from the pursuer
  double cost_escape = 0.0;  // cost_effort / cost_dist
};

struct EscapeGoal {
  Cell cell;
  /// Set when no reachable cell outside the pursuer's region exists; the goal is then the
  /// free cell farthest from the pursuer.
  bool fallback = false;
  std::optional<EscapeCandidate> candidate;
};

/// Every scored escape candidate, in row-major order.
std::vector<EscapeCandidate> escape_candidates(const NavGrid& nav, const VisibilityRegion& region,
                                               const Pose& pursuer, const Pose& evader,
                                               const EscapeConfig& config);

/// Picks the free cell outside the pursuer's visibility region minimising
/// travel-effort / pursuer-distance; ties go to the lowest row-major cell.
EscapeGoal compute_escape_goal(const NavGrid& nav, const VisibilityRegion& region, const Pose& pursuer,
                               const Pose& evader, const EscapeConfig& config = {});
EscapeGoal compute_escape_goal(const GridMap& map, const Pose& pursuer, const Pose& evader,
                               const SensorModel& sensor, const EscapeConfig& config = {});

/// Tunables shared by the built-in policies.
struct PolicyParams {
  double dt = 1.0;
  double omega_max = kPi / 2.0;
  double lookahead = 0.3;
  // Random wandering.
  double arrival_tolerance = 0.3;
  int stall_ticks = 20;
  // Smart pursuer.
  double standoff = 1.5;
  double k_omega = 1.0;        // path following, per radian of bearing error
  double k_omega_image = 0.6;  // reactive control, per half image width of offset
  double k_v = 0.8;
  double image_width = 640.0;
  double target_radius = 0.25;
  FilterConfig filter;
  // Smart evader.
  EscapeConfig escape;
  double d_safe = 8.0;
};

/// Read-only snapshot handed to a policy on its turn.
struct WorldView {
  const GridMap& map;
  const NavGrid& nav;
  const SensorModel& sensor;
  int tick = 0;
  Pose self;
  /// Evader policies always get the true pursuer pose. Pursuer policies get the evader pose
  /// only on ticks where it is detected.
  std::optional<Pose> opponent;
  /// Visibility region of the pursuer's current pose.
  const VisibilityRegion& pursuer_region;
};

struct Decision {
  ControlCommand cmd;
  PursuerMode mode = PursuerMode::kExternal;
  std::optional<Pose> estimate;
};

class Policy {
 public:
  virtual ~Policy() = default;
  /// Called once at tick 0 before any move.
  virtual void begin(const WorldView&) {}
  virtual Decision decide(const WorldView& view) = 0;
  /// Particle cloud for display, when the policy keeps one.
  virtual const ParticleSet* particles() const { return nullptr; }
};

/// Wanders between uniformly drawn reachable waypoints.
class RandomPolicy final : public Policy {
 public:
  RandomPolicy(AgentSpec spec, PolicyParams params, Rng rng);
  Decision decide(const WorldView& view) override;
  const std::vector<Cell>& waypoint_history() const { return history_; }

 private:
  void pick_waypoint(const WorldView& view);

  AgentSpec spec_;
  PolicyParams params_;
  Rng rng_;
  std::optional<Path> path_;
  std::vector<Cell> history_;
  double best_distance_ = 0.0;
  int ticks_without_progress_ = 0;
};

/// Replans an escape goal every tick and drives to it.
class SmartEvaderPolicy final : public Policy {
 public:
  SmartEvaderPolicy(AgentSpec spec, PolicyParams params);
  Decision decide(const WorldView& view) override;
  const std::optional<EscapeGoal>& last_goal() const { return goal_; }

 private:
  AgentSpec spec_;
  PolicyParams params_;
  std::optional<EscapeGoal> goal_;
};

/// Reactive image-centring while the evader is seen; otherwise tracks the particle-filter
/// estimate with the planner.
class SmartPursuerPolicy final : public Policy {
 public:
  SmartPursuerPolicy(AgentSpec spec, PolicyParams params, std::uint64_t filter_seed);
  void begin(const WorldView& view) override;
  Decision decide(const WorldView& view) override;
  const ParticleSet* particles() const override { return filter_ ? &*filter_ : nullptr; }
  const std::optional<Path>& path() const { return path_; }

 private:
  Decision chase_estimate(const WorldView& view);

  AgentSpec spec_;
  PolicyParams params_;
  Rng seed_source_;
  std::optional<ParticleSet> filter_;
  std::optional<Path> path_;
  std::optional<Cell> goal_cell_;
};

/// Replays a fixed command list (tick k uses entry k-1); holds once it runs out.
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<ControlCommand> commands, PursuerMode mode = PursuerMode::kExternal);
  Decision decide(const WorldView& view) override;

 private:
  std::vector<ControlCommand> commands_;
  PursuerMode mode_;
};

/// Drives to a fixed goal point with plan_path + follow_path; holds when no path exists.
class GoalSeeker {
 public:
  GoalSeeker() = default;
  void set_goal(Point2 goal) { goal_ = goal; path_.reset(); }
  void clear() { goal_.reset(); path_.reset(); }
  bool active() const { return goal_.has_value(); }
  std::optional<Point2> goal() const { return goal_; }
  ControlCommand command(const WorldView& view, double v_max, const PolicyParams& params, double radius);

 private:
  std::optional<Point2> goal_;
  std::optional<Path> path_;
};

/// Plans on `nav`, first snapping start and goal onto passable cells.
std::optional<Path> plan_snapped(const NavGrid& nav, Point2 start, Point2 goal);

FollowConfig follow_config(const PolicyParams& params, const GridMap& map, double radius, double v_max);

}  // namespace pursuit
