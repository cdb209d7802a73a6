#pragma once

#include <cmath>
#include <optional>
#include "pursuit/errors.hpp"
#include <vector>

#include "pursuit/grid_map.hpp"
#include "pursuit/visibility.hpp"

namespace pursuit {

struct ControlCommand {
  double v = 0.0;
  double omega = 0.0;

  friend bool operator==(const ControlCommand&, const ControlCommand&) = default;
};

/// Single-axis pinhole observation of a target box, in pixels, plus its mean depth.
struct ImageObservation {
  double x_b = 0.0;
  double w_b = 0.0;
  double w_i = 640.0;
  double depth = 0.0;

  /// Horizontal offset of the box centre from the image centre (positive = right).
  double target_offset_x() const { return x_b + w_b / 2.0 - w_i / 2.0; }
};

/// Length of an 8-connected grid path as (straight steps, diagonal steps). Two different
/// counts never have equal lengths, so comparisons through value() are exact for any grid
/// that fits in memory.
struct GridCost {
  long straight = 0;
  long diagonal = 0;

  double value() const { return static_cast<double>(straight) + static_cast<double>(diagonal) * std::sqrt(2.0); }
  friend bool operator==(const GridCost&, const GridCost&) = default;
};

struct Path {
  std::vector<Point2> waypoints;
  std::vector<Cell> cells;
  GridCost cost;

  /// Path length in metres.
  double length(double resolution) const { return cost.value() * resolution; }
};

/// Passability after inflating obstacles: a cell is blocked when it is occupied or its centre
/// lies closer than `inflation_radius` to an occupied cell or the map border.
class NavGrid {
 public:
  NavGrid(const GridMap& map, double inflation_radius);

  const GridMap& map() const { return *map_; }
  double inflation_radius() const { return inflation_radius_; }
  bool passable(Cell c) const { return map_->in_bounds(c) && passable_[map_->index(c)] != 0; }
  std::size_t passable_count() const;

  /// Closest passable cell to `p` by centre distance (ties row-major), or nullopt if none.
  std::optional<Cell> nearest_passable(Point2 p) const;

  /// Whether moving between two 8-adjacent passable cells is allowed (diagonals may not cut
  /// a blocked corner).
  bool can_step(Cell from, Cell to) const;

 private:
  const GridMap* map_;
  double inflation_radius_;
  std::vector<std::uint8_t> passable_;
};

/// A* over the inflated grid: unit straight cost, sqrt(2) diagonal, octile heuristic, ties
/// expanded lowest row-major cell first. Throws NoPathError when start or goal is blocked or
/// the goal is unreachable.
Path plan_path(const NavGrid& nav, Point2 start, Point2 goal);
Path plan_path(const GridMap& map, Point2 start, Point2 goal, double inflation_radius);

/// Single-source shortest grid distances under the same move rules as plan_path. Entries for
/// unreachable cells are nullopt.
std::vector<std::optional<GridCost>> grid_distances(const NavGrid& nav, Cell source);

/// Unicycle step, rotate then translate: theta' = theta + omega*dt, then move v*dt along
/// theta'. If the disc of `radius` swept along the move touches an obstacle the position is
/// kept and only the heading changes.
Pose step_unicycle(const Pose& pose, const ControlCommand& cmd, double dt, const GridMap& map, double radius);

/// Synthesises the detector box for an evader the pursuer can see. Throws ContractError when
/// is_detected does not hold.
ImageObservation project_to_image(const GridMap& map, const Pose& pursuer, const Pose& evader,
                                  const SensorModel& sensor, double image_width, double target_radius);

struct ReactiveGains {
  // At 1 Hz the turn per tick is k_omega / tan(fov/2) times the bearing, and the loop
  // oscillates once that product nears 1.6; 0.6 keeps it close to 1 for fov = pi/3.
  double k_omega = 0.6;
  double k_v = 0.8;
  double omega_max = kPi / 2.0;
};

/// Keeps the target centred in the image and at `standoff` metres.
ControlCommand reactive_control(const ImageObservation& obs, double v_max, double standoff,
                                const ReactiveGains& gains = {});

struct FollowConfig {
  double lookahead = 0.3;
  double k_omega = 1.0;
  double omega_max = kPi / 2.0;
  double goal_tolerance = 0.05;
  /// When set, lookahead targets whose straight approach would collide are pulled back along
  /// the path.
  const GridMap* map = nullptr;
  double radius = 0.0;
};

/// Pure-pursuit waypoint tracking. Returns (0, 0) once the final waypoint is reached.
ControlCommand follow_path(const Pose& pose, const Path& path, double v_max, double dt,
                           const FollowConfig& config = {});

}  // namespace pursuit
