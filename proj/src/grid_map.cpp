#include "pursuit/grid_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace pursuit {

GridMap::GridMap(int width, int height, double resolution, Point2 origin,
                 std::vector<std::uint8_t> occupancy)
    : width_(width), height_(height), resolution_(resolution), origin_(origin),
      occupancy_(std::move(occupancy)) {
  if (width_ < 1 || height_ < 1) {
    throw MapFormatError("map dimensions must be at least 1x1");
  }
  if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) {
    throw MapFormatError("map resolution must be positive");
  }
  if (occupancy_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
    throw MapFormatError("occupancy size does not match map dimensions");
  }
  for (auto& v : occupancy_) {
    v = v != 0 ? 1 : 0;
  }
}

GridMap GridMap::empty(int width, int height, double resolution, Point2 origin) {
  const auto cells = static_cast<std::size_t>(std::max(width, 0)) *
                     static_cast<std::size_t>(std::max(height, 0));
  return GridMap(width, height, resolution, origin, std::vector<std::uint8_t>(cells, 0));
}

bool GridMap::contains(Point2 p) const {
  const double gx = (p.x - origin_.x) / resolution_;
  const double gy = (p.y - origin_.y) / resolution_;
  return gx >= 0.0 && gy >= 0.0 && gx < width_ && gy < height_;
}

std::optional<Cell> GridMap::try_world_to_cell(Point2 p) const {
  if (!contains(p)) {
    return std::nullopt;
  }
  const int col = std::min(static_cast<int>(std::floor((p.x - origin_.x) / resolution_)), width_ - 1);
  const int row = std::min(static_cast<int>(std::floor((p.y - origin_.y) / resolution_)), height_ - 1);
  return Cell{row, col};
}

Cell GridMap::world_to_cell(Point2 p) const {
  if (auto c = try_world_to_cell(p)) {
    return *c;
  }
  std::ostringstream os;
  os << "point (" << p.x << ", " << p.y << ") is outside the map";
  throw BoundsError(os.str());
}

Point2 GridMap::cell_to_world(Cell c) const {
  return {origin_.x + (c.col + 0.5) * resolution_, origin_.y + (c.row + 0.5) * resolution_};
}

bool GridMap::is_free(Point2 p) const {
  auto c = try_world_to_cell(p);
  return c && is_free(*c);
}

std::vector<Cell> GridMap::free_cells() const {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < occupancy_.size(); ++i) {
    if (occupancy_[i] == 0) {
      out.push_back(cell_at(i));
    }
  }
  return out;
}

std::vector<Cell> GridMap::occupied_cells() const {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < occupancy_.size(); ++i) {
    if (occupancy_[i] != 0) {
      out.push_back(cell_at(i));
    }
  }
  return out;
}

std::size_t GridMap::free_count() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), 0));
}

bool line_of_sight(const GridMap& map, Point2 a, Point2 b) {
  const Cell start = map.world_to_cell(a);
  const Cell end = map.world_to_cell(b);
  if (map.occupied(start)) {
    return false;
  }

  const double res = map.resolution();
  const Point2 o = map.origin();
  const double gx0 = (a.x - o.x) / res;
  const double gy0 = (a.y - o.y) / res;
  const double dx = (b.x - o.x) / res - gx0;
  const double dy = (b.y - o.y) / res - gy0;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int step_col = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_row = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double delta_x = dx != 0 ? 1.0 / std::abs(dx) : kInf;
  const double delta_y = dy != 0 ? 1.0 / std::abs(dy) : kInf;
  double next_x = dx > 0 ? (start.col + 1 - gx0) / dx : (dx < 0 ? (gx0 - start.col) / -dx : kInf);
  double next_y = dy > 0 ? (start.row + 1 - gy0) / dy : (dy < 0 ? (gy0 - start.row) / -dy : kInf);

  int col = start.col;
  int row = start.row;
  while (col != end.col || row != end.row) {
    const bool col_done = col == end.col;
    const bool row_done = row == end.row;
    if (!col_done && !row_done && next_x == next_y) {
      // Exact corner crossing: both side neighbours are touched.
      if (map.occupied({row, col + step_col}) || map.occupied({row + step_row, col})) {
        return false;
      }
      col += step_col;
      row += step_row;
      next_x += delta_x;
      next_y += delta_y;
    } else if (row_done || (!col_done && next_x < next_y)) {
      col += step_col;
      next_x += delta_x;
    } else {
      row += step_row;
      next_y += delta_y;
    }
    if (map.occupied({row, col})) {
      return false;
    }
  }
  return true;
}

double distance_to_cell(const GridMap& map, Point2 p, Cell c) {
  const double res = map.resolution();
  const double x0 = map.origin().x + c.col * res;
  const double y0 = map.origin().y + c.row * res;
  const double dx = std::max({x0 - p.x, 0.0, p.x - (x0 + res)});
  const double dy = std::max({y0 - p.y, 0.0, p.y - (y0 + res)});
  return std::hypot(dx, dy);
}

namespace {

bool disc_inside_bounds(const GridMap& map, Point2 c, double radius) {
  const Point2 o = map.origin();
  const double max_x = o.x + map.width() * map.resolution();
  const double max_y = o.y + map.height() * map.resolution();
  return c.x - radius >= o.x && c.y - radius >= o.y && c.x + radius <= max_x &&
         c.y + radius <= max_y && map.contains(c);
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) {
    return distance(p, a);
  }
  const double t = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

// Liang-Barsky clip of segment a->b against the box.
bool segment_hits_box(Point2 a, Point2 b, double x0, double y0, double x1, double y1) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double d[2] = {b.x - a.x, b.y - a.y};
  const double lo[2] = {x0 - a.x, y0 - a.y};
  const double hi[2] = {x1 - a.x, y1 - a.y};
  for (int axis = 0; axis < 2; ++axis) {
    if (d[axis] == 0.0) {
      if (lo[axis] > 0.0 || hi[axis] < 0.0) {
        return false;
      }
      continue;
    }
    double ta = lo[axis] / d[axis];
    double tb = hi[axis] / d[axis];
    if (ta > tb) {
      std::swap(ta, tb);
    }
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) {
      return false;
    }
  }
  return true;
}

double segment_cell_distance(const GridMap& map, Point2 a, Point2 b, Cell c) {
  const double res = map.resolution();
  const double x0 = map.origin().x + c.col * res;
  const double y0 = map.origin().y + c.row * res;
  const double x1 = x0 + res;
  const double y1 = y0 + res;
  if (segment_hits_box(a, b, x0, y0, x1, y1)) {
    return 0.0;
  }
  double best = std::min(distance_to_cell(map, a, c), distance_to_cell(map, b, c));
  for (Point2 corner : {Point2{x0, y0}, Point2{x1, y0}, Point2{x0, y1}, Point2{x1, y1}}) {
    best = std::min(best, point_segment_distance(corner, a, b));
  }
  return best;
}

}  // namespace

bool disc_collides(const GridMap& map, Point2 center, double radius) {
  return swept_disc_collides(map, center, center, radius);
}

bool swept_disc_collides(const GridMap& map, Point2 from, Point2 to, double radius) {
  if (radius <= 0.0) {
    return !map.is_free(from) || !map.is_free(to) || !line_of_sight(map, from, to);
  }
  if (!disc_inside_bounds(map, from, radius) || !disc_inside_bounds(map, to, radius)) {
    return true;
  }
  const double res = map.resolution();
  const Point2 o = map.origin();
  const int col_lo = std::max(0, static_cast<int>(std::floor((std::min(from.x, to.x) - radius - o.x) / res)));
  const int col_hi = std::min(map.width() - 1, static_cast<int>(std::floor((std::max(from.x, to.x) + radius - o.x) / res)));
  const int row_lo = std::max(0, static_cast<int>(std::floor((std::min(from.y, to.y) - radius - o.y) / res)));
  const int row_hi = std::min(map.height() - 1, static_cast<int>(std::floor((std::max(from.y, to.y) + radius - o.y) / res)));
  for (int row = row_lo; row <= row_hi; ++row) {
    for (int col = col_lo; col <= col_hi; ++col) {
      const Cell c{row, col};
      if (!map.occupied(c)) {
        continue;
      }
      if (segment_cell_distance(map, from, to, c) < radius) {
        return true;
      }
    }
  }
  return false;
}

int count_free_components(const GridMap& map) {
  std::vector<std::uint8_t> seen(map.cell_count(), 0);
  int components = 0;
  std::queue<Cell> frontier;
  for (std::size_t i = 0; i < map.cell_count(); ++i) {
    if (seen[i] != 0 || map.occupancy()[i] != 0) {
      continue;
    }
    ++components;
    seen[i] = 1;
    frontier.push(map.cell_at(i));
    while (!frontier.empty()) {
      const Cell c = frontier.front();
      frontier.pop();
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell n{c.row + dr, c.col + dc};
          if ((dr != 0 || dc != 0) && map.is_free(n) && seen[map.index(n)] == 0) {
            seen[map.index(n)] = 1;
            frontier.push(n);
          }
        }
      }
    }
  }
  return components;
}

}  // namespace pursuit
