#include "pursuit/visibility.hpp"

#include <algorithm>
#include <cmath>

namespace pursuit {

namespace {

constexpr double kAngleSlack = 1e-12;

void require_free(const GridMap& map, const Pose& pose, const char* who) {
  if (!map.is_free(pose.position())) {
    throw InvalidPoseError(std::string(who) + " pose is not in free space");
  }
}

bool within_wedge(const Pose& pose, Point2 target, const SensorModel& sensor) {
  if (sensor.fov >= kTwoPi) {
    return true;
  }
  return std::abs(relative_bearing(pose, target)) <= sensor.fov / 2.0 + kAngleSlack;
}

bool within_range(const Pose& pose, Point2 target, const SensorModel& sensor) {
  const double d = distance(pose.position(), target);
  return d >= sensor.dist_min && d <= sensor.dist_max;
}

}  // namespace

void SensorModel::validate() const {
  if (!(fov > 0.0)) throw std::invalid_argument("sensor fov must be positive");
  if (!(dist_min >= 0.0) || !(dist_max > dist_min)) {
    throw std::invalid_argument("sensor range must satisfy 0 <= dist_min < dist_max");
  }
  if (!(angle_step > 0.0) || !(distance_step > 0.0)) {
    throw std::invalid_argument("sensor steps must be positive");
  }
}

VisibilityRegion::VisibilityRegion(const GridMap& map, Pose source, SensorModel sensor,
                                   std::vector<Cell> cells)
    : width_(map.width()), height_(map.height()), resolution_(map.resolution()),
      origin_(map.origin()), source_(source), sensor_(sensor), cells_(std::move(cells)),
      member_(map.cell_count(), 0) {
  std::sort(cells_.begin(), cells_.end());
  cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
  for (const Cell& c : cells_) {
    member_[map.index(c)] = 1;
  }
}

bool VisibilityRegion::contains(Cell c) const {
  if (c.row < 0 || c.row >= height_ || c.col < 0 || c.col >= width_) {
    return false;
  }
  return member_[static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(c.col)] != 0;
}

bool VisibilityRegion::contains(Point2 p) const {
  const double gx = (p.x - origin_.x) / resolution_;
  const double gy = (p.y - origin_.y) / resolution_;
  if (!(gx >= 0.0 && gy >= 0.0 && gx < width_ && gy < height_)) {
    return false;
  }
  return contains(Cell{static_cast<int>(gy), static_cast<int>(gx)});
}

VisibilityRegion compute_visibility(const GridMap& map, const Pose& pose, const SensorModel& sensor) {
  sensor.validate();
  require_free(map, pose, "sensor");

  const double res = map.resolution();
  const Point2 o = map.origin();
  std::vector<std::uint8_t> touched(map.cell_count(), 0);
  std::vector<Cell> candidates;

  const double half = std::min(sensor.fov, kTwoPi) / 2.0;
  const auto rays_per_side = static_cast<long>(std::floor(half / sensor.angle_step + 1e-9));
  auto cast_ray = [&](double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (long step = 0;; ++step) {
      const double dist = sensor.dist_min + static_cast<double>(step) * sensor.distance_step;
      if (dist > sensor.dist_max + 1e-12) {
        break;
      }
      const double gx = (pose.x + dist * c - o.x) / res;
      const double gy = (pose.y + dist * s - o.y) / res;
      if (!(gx >= 0.0 && gy >= 0.0 && gx < map.width() && gy < map.height())) {
        break;
      }
      const Cell cell{static_cast<int>(gy), static_cast<int>(gx)};
      const std::size_t idx = map.index(cell);
      if (map.occupancy()[idx] != 0) {
        break;
      }
      if (touched[idx] == 0) {
        touched[idx] = 1;
        candidates.push_back(cell);
      }
    }
  };
  // Rays sit on multiples of angle_step from the heading, so a wider wedge only adds rays.
  for (long j = -rays_per_side; j <= rays_per_side; ++j) {
    cast_ray(pose.theta + static_cast<double>(j) * sensor.angle_step);
  }

  std::vector<Cell> cells;
  cells.reserve(candidates.size());
  const Point2 eye = pose.position();
  for (const Cell& c : candidates) {
    if (line_of_sight(map, eye, map.cell_to_world(c))) {
      cells.push_back(c);
    }
  }
  return VisibilityRegion(map, pose, sensor, std::move(cells));
}

bool sees_point(const GridMap& map, const Pose& pose, Point2 target, const SensorModel& sensor) {
  if (!map.contains(target)) {
    return false;
  }
  return within_range(pose, target, sensor) && within_wedge(pose, target, sensor) &&
         line_of_sight(map, pose.position(), target);
}

std::vector<Cell> visibility_oracle(const GridMap& map, const Pose& pose, const SensorModel& sensor) {
  sensor.validate();
  require_free(map, pose, "sensor");
  std::vector<Cell> out;
  for (const Cell& c : map.free_cells()) {
    if (sees_point(map, pose, map.cell_to_world(c), sensor)) {
      out.push_back(c);
    }
  }
  return out;
}

bool is_detected(const GridMap& map, const Pose& pursuer, const Pose& evader, const SensorModel& sensor) {
  require_free(map, pursuer, "pursuer");
  require_free(map, evader, "evader");
  return sees_point(map, pursuer, evader.position(), sensor);
}

bool in_sensor_footprint(const GridMap& map, const Pose& pose, Cell c, const SensorModel& sensor) {
  const Point2 center = map.cell_to_world(c);
  return within_range(pose, center, sensor) && within_wedge(pose, center, sensor);
}

}  // namespace pursuit
