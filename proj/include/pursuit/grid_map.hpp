#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include "pursuit/errors.hpp"
#include <string>
#include <vector>

#include "pursuit/geometry.hpp"

namespace pursuit {

/// Discrete grid coordinate. Ordering is row-major, which is also the tie-break order used
/// by the planners and the escape-point search.
struct Cell {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Immutable occupancy grid. Cell (row, col) covers
/// [origin.x + col*res, origin.x + (col+1)*res) x [origin.y + row*res, origin.y + (row+1)*res),
/// so world x grows with the column and world y grows with the row (row 0 is the top line
/// of an ASCII map document).
class GridMap {
 public:
  GridMap(int width, int height, double resolution, Point2 origin,
          std::vector<std::uint8_t> occupancy);

  static GridMap empty(int width, int height, double resolution, Point2 origin = {});

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Point2 origin() const { return origin_; }
  std::size_t cell_count() const { return occupancy_.size(); }

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
  }
  bool contains(Point2 p) const;

  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }
  Cell cell_at(std::size_t index) const {
    return {static_cast<int>(index / static_cast<std::size_t>(width_)),
            static_cast<int>(index % static_cast<std::size_t>(width_))};
  }

  /// Out-of-bounds cells count as occupied.
  bool occupied(Cell c) const { return !in_bounds(c) || occupancy_[index(c)] != 0; }
  bool is_free(Cell c) const { return in_bounds(c) && occupancy_[index(c)] == 0; }
  bool is_free(Point2 p) const;

  /// Throws BoundsError when `p` lies outside the grid.
  Cell world_to_cell(Point2 p) const;
  std::optional<Cell> try_world_to_cell(Point2 p) const;
  Point2 cell_to_world(Cell c) const;

  std::vector<Cell> free_cells() const;
  std::vector<Cell> occupied_cells() const;
  std::size_t free_count() const;

  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  int width_;
  int height_;
  double resolution_;
  Point2 origin_;
  std::vector<std::uint8_t> occupancy_;
};

/// True iff the segment a->b touches no occupied cell. Uses a supercover traversal: every
/// cell the segment passes through is checked, including both neighbours when the segment
/// crosses a cell corner exactly.
bool line_of_sight(const GridMap& map, Point2 a, Point2 b);

/// Shortest distance from point `p` to the closed square of cell `c`.
double distance_to_cell(const GridMap& map, Point2 p, Cell c);

/// True when a disc of `radius` centred at `center` overlaps an occupied cell or leaves the map.
bool disc_collides(const GridMap& map, Point2 center, double radius);

/// True when the disc swept along from->to overlaps an occupied cell or leaves the map.
bool swept_disc_collides(const GridMap& map, Point2 from, Point2 to, double radius);

/// Number of 8-connected components of free space.
int count_free_components(const GridMap& map);

inline bool is_connected(const GridMap& map) { return count_free_components(map) == 1; }

}  // namespace pursuit
