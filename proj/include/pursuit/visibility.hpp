#pragma once

#include <cstdint>
#include "pursuit/errors.hpp"
#include <vector>

#include "pursuit/grid_map.hpp"

namespace pursuit {

/// Forward-facing range sensor. The wedge is symmetric about the heading.
struct SensorModel {
  double fov = kPi / 3.0;
  double dist_min = 0.45;
  double dist_max = 4.0;
  double angle_step = 0.0016;
  double distance_step = 0.05;

  double theta_min() const { return -fov / 2.0; }
  double theta_max() const { return fov / 2.0; }

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Sampled visibility region of a sensor at one pose. Cells are kept sorted row-major and
/// mirrored in a bitmap for constant-time membership.
class VisibilityRegion {
 public:
  VisibilityRegion(const GridMap& map, Pose source, SensorModel sensor, std::vector<Cell> cells);

  const std::vector<Cell>& cells() const { return cells_; }
  const Pose& source_pose() const { return source_; }
  const SensorModel& sensor() const { return sensor_; }
  std::size_t size() const { return cells_.size(); }

  bool contains(Cell c) const;
  /// Membership of the cell holding `p`; false outside the map.
  bool contains(Point2 p) const;

 private:
  int width_;
  int height_;
  double resolution_;
  Point2 origin_;
  Pose source_;
  SensorModel sensor_;
  std::vector<Cell> cells_;
  std::vector<std::uint8_t> member_;
};

/// Ray-marches the sensor wedge: rays at theta + j * angle_step for every integer j with
/// |j * angle_step| <= fov / 2, each sampled from dist_min to dist_max every distance_step. A ray stops at the
/// first occupied cell or at the map border. A sampled cell is kept only if its centre is in
/// line of sight of the pose. Throws InvalidPoseError when the pose is not in free space.
VisibilityRegion compute_visibility(const GridMap& map, const Pose& pose, const SensorModel& sensor);

/// Exact per-point test: range within [dist_min, dist_max], bearing inside the wedge and a clear
/// line of sight.
bool sees_point(const GridMap& map, const Pose& pose, Point2 target, const SensorModel& sensor);

/// Per-cell reference: every free cell whose centre passes sees_point.
std::vector<Cell> visibility_oracle(const GridMap& map, const Pose& pose, const SensorModel& sensor);

/// Geometric detection of the evader by the pursuer (exact, not sampled).
bool is_detected(const GridMap& map, const Pose& pursuer, const Pose& evader, const SensorModel& sensor);

/// True when the centre of `c` is within range and inside the wedge, ignoring occlusion.
bool in_sensor_footprint(const GridMap& map, const Pose& pose, Cell c, const SensorModel& sensor);

}  // namespace pursuit
