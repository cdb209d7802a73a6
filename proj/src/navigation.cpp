#include "pursuit/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

namespace pursuit {

namespace {

constexpr int kNeighbourRows[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kNeighbourCols[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

GridCost add_step(GridCost c, bool diagonal) {
  if (diagonal) {
    ++c.diagonal;
  } else {
    ++c.straight;
  }
  return c;
}

double octile(Cell a, Cell b) {
  const double dr = std::abs(a.row - b.row);
  const double dc = std::abs(a.col - b.col);
  return std::max(dr, dc) - std::min(dr, dc) + std::min(dr, dc) * std::sqrt(2.0);
}

std::vector<Point2> centres(const GridMap& map, const std::vector<Cell>& cells) {
  std::vector<Point2> out;
  out.reserve(cells.size());
  for (const Cell& c : cells) {
    out.push_back(map.cell_to_world(c));
  }
  return out;
}

}  // namespace

NavGrid::NavGrid(const GridMap& map, double inflation_radius)
    : map_(&map), inflation_radius_(inflation_radius), passable_(map.cell_count(), 0) {
  const double res = map.resolution();
  const int span = static_cast<int>(std::ceil(inflation_radius / res)) + 1;
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      const Cell c{row, col};
      if (map.occupied(c)) continue;
      bool ok = true;
      if (inflation_radius > 0.0) {
        const Point2 p = map.cell_to_world(c);
        const double to_border = std::min({(col + 0.5) * res, (row + 0.5) * res,
                                           (map.width() - col - 0.5) * res,
                                           (map.height() - row - 0.5) * res});
        ok = to_border >= inflation_radius;
        for (int dr = -span; ok && dr <= span; ++dr) {
          for (int dc = -span; ok && dc <= span; ++dc) {
            const Cell n{row + dr, col + dc};
            if (map.in_bounds(n) && map.occupied(n) && distance_to_cell(map, p, n) < inflation_radius) {
              ok = false;
            }
          }
        }
      }
      passable_[map.index(c)] = ok ? 1 : 0;
    }
  }
}

std::size_t NavGrid::passable_count() const {
  return static_cast<std::size_t>(std::count(passable_.begin(), passable_.end(), 1));
}

std::optional<Cell> NavGrid::nearest_passable(Point2 p) const {
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < passable_.size(); ++i) {
    if (passable_[i] == 0) continue;
    const Cell c = map_->cell_at(i);
    const double d = distance(map_->cell_to_world(c), p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

bool NavGrid::can_step(Cell from, Cell to) const {
  if (!passable(to)) return false;
  if (from.row != to.row && from.col != to.col) {
    return passable({from.row, to.col}) && passable({to.row, from.col});
  }
  return true;
}

Path plan_path(const NavGrid& nav, Point2 start_point, Point2 goal_point) {
  const GridMap& map = nav.map();
  const auto start = map.try_world_to_cell(start_point);
  const auto goal = map.try_world_to_cell(goal_point);
  if (!start || !nav.passable(*start)) {
    throw NoPathError("path start is outside inflated free space");
  }
  if (!goal || !nav.passable(*goal)) {
    throw NoPathError("path goal is outside inflated free space");
  }
  if (*start == *goal) {
    return Path{{map.cell_to_world(*start)}, {*start}, {}};
  }

  const std::size_t n = map.cell_count();
  std::vector<std::optional<GridCost>> best(n);
  std::vector<std::size_t> parent(n, n);
  std::vector<std::uint8_t> closed(n, 0);
  using Entry = std::tuple<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const std::size_t s = map.index(*start);
  const std::size_t g = map.index(*goal);
  best[s] = GridCost{};
  open.emplace(octile(*start, *goal), s);
  while (!open.empty()) {
    const auto [f, idx] = open.top();
    open.pop();
    if (closed[idx] != 0) continue;
    closed[idx] = 1;
    if (idx == g) break;
    const Cell c = map.cell_at(idx);
    for (int k = 0; k < 8; ++k) {
      const Cell nb{c.row + kNeighbourRows[k], c.col + kNeighbourCols[k]};
      if (!nav.can_step(c, nb)) continue;
      const std::size_t ni = map.index(nb);
      if (closed[ni] != 0) continue;
      const GridCost cand = add_step(*best[idx], kNeighbourRows[k] != 0 && kNeighbourCols[k] != 0);
      if (!best[ni] || cand.value() < best[ni]->value()) {
        best[ni] = cand;
        parent[ni] = idx;
        open.emplace(cand.value() + octile(nb, *goal), ni);
      }
    }
  }
  if (closed[g] == 0) {
    throw NoPathError("goal is unreachable");
  }
  std::vector<Cell> cells;
  for (std::size_t at = g; at != n; at = parent[at]) {
    cells.push_back(map.cell_at(at));
  }
  std::reverse(cells.begin(), cells.end());
  return Path{centres(map, cells), std::move(cells), *best[g]};
}

Path plan_path(const GridMap& map, Point2 start, Point2 goal, double inflation_radius) {
  return plan_path(NavGrid(map, inflation_radius), start, goal);
}

std::vector<std::optional<GridCost>> grid_distances(const NavGrid& nav, Cell source) {
  const GridMap& map = nav.map();
  std::vector<std::optional<GridCost>> dist(map.cell_count());
  if (!nav.passable(source)) {
    return dist;
  }
  std::vector<std::uint8_t> closed(map.cell_count(), 0);
  using Entry = std::tuple<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t s = map.index(source);
  dist[s] = GridCost{};
  open.emplace(0.0, s);
  while (!open.empty()) {
    const auto [d, idx] = open.top();
    open.pop();
    if (closed[idx] != 0) continue;
    closed[idx] = 1;
    const Cell c = map.cell_at(idx);
    for (int k = 0; k < 8; ++k) {
      const Cell nb{c.row + kNeighbourRows[k], c.col + kNeighbourCols[k]};
      if (!nav.can_step(c, nb)) continue;
      const std::size_t ni = map.index(nb);
      if (closed[ni] != 0) continue;
      const GridCost cand = add_step(*dist[idx], kNeighbourRows[k] != 0 && kNeighbourCols[k] != 0);
      if (!dist[ni] || cand.value() < dist[ni]->value()) {
        dist[ni] = cand;
        open.emplace(cand.value(), ni);
      }
    }
  }
  return dist;
}

Pose step_unicycle(const Pose& pose, const ControlCommand& cmd, double dt, const GridMap& map, double radius) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("step_unicycle requires dt > 0");
  }
  const double theta = normalize_angle(pose.theta + cmd.omega * dt);
  const Point2 from = pose.position();
  const Point2 to{pose.x + cmd.v * std::cos(theta) * dt, pose.y + cmd.v * std::sin(theta) * dt};
  if (cmd.v == 0.0 || swept_disc_collides(map, from, to, radius)) {
    return {pose.x, pose.y, theta};
  }
  return {to.x, to.y, theta};
}

ImageObservation project_to_image(const GridMap& map, const Pose& pursuer, const Pose& evader,
                                  const SensorModel& sensor, double image_width, double target_radius) {
  if (!is_detected(map, pursuer, evader, sensor)) {
    throw ContractError("project_to_image requires a detected evader");
  }
  const double half_fov_tan = std::tan(sensor.fov / 2.0);
  const double beta = relative_bearing(pursuer, evader.position());
  const double depth = distance(pursuer.position(), evader.position());
  const double u = image_width / 2.0 * (1.0 + std::tan(beta) / half_fov_tan);
  const double alpha = std::atan(target_radius / depth);
  const double w_b = std::clamp(image_width * std::tan(alpha) / half_fov_tan, 1.0, image_width);
  return ImageObservation{u - w_b / 2.0, w_b, image_width, depth};
}

ControlCommand reactive_control(const ImageObservation& obs, double v_max, double standoff,
                                const ReactiveGains& gains) {
  const double offset = obs.target_offset_x();
  // Image x grows towards positive bearing, so the turn rate takes the sign of the offset.
  const double omega = std::clamp(gains.k_omega * offset / (obs.w_i / 2.0), -gains.omega_max, gains.omega_max);
  const double v = std::clamp(gains.k_v * (obs.depth - standoff), 0.0, v_max);
  return {v, omega};
}

ControlCommand follow_path(const Pose& pose, const Path& path, double v_max, double dt,
                           const FollowConfig& config) {
  if (path.waypoints.empty()) {
    throw std::invalid_argument("follow_path requires a non-empty path");
  }
  const Point2 here = pose.position();
  const auto& wps = path.waypoints;
  const std::size_t last = wps.size() - 1;
  if (distance(here, wps[last]) <= config.goal_tolerance) {
    return {};
  }

  std::size_t nearest = 0;
  double nearest_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const double d = distance(here, wps[i]);
    if (d < nearest_d) {
      nearest_d = d;
      nearest = i;
    }
  }
  std::size_t target = last;
  for (std::size_t i = nearest; i < wps.size(); ++i) {
    if (distance(here, wps[i]) > config.lookahead) {
      target = i;
      break;
    }
  }
  if (config.map != nullptr) {
    while (target > nearest && swept_disc_collides(*config.map, here, wps[target], config.radius)) {
      --target;
    }
    if (distance(here, wps[target]) <= config.goal_tolerance && target < last) {
      ++target;
    }
  }

  const double error = relative_bearing(pose, wps[target]);
  const double omega = std::clamp(config.k_omega * error, -config.omega_max, config.omega_max);
  // Rotation happens before translation, so speed is scaled by the heading error left after
  // this tick's turn.
  const double residual = error - omega * dt;
  double v = std::min(v_max * std::max(0.0, std::cos(residual)), distance(here, wps[target]) / dt);
  if (config.map != nullptr && v > 0.0) {
    // The move runs along the post-rotation heading, which can clip a wall the waypoint line
    // clears; back off until it fits.
    const double theta = pose.theta + omega * dt;
    for (int i = 0; i < 4 && v > 0.0; ++i) {
      const Point2 to{here.x + v * std::cos(theta) * dt, here.y + v * std::sin(theta) * dt};
      if (!swept_disc_collides(*config.map, here, to, config.radius)) break;
      v = i < 3 ? v / 2.0 : 0.0;
    }
  }
  return {v, omega};
}

}  // namespace pursuit
