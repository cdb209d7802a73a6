#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "pursuit/grid_map.hpp"
#include "pursuit/visibility.hpp"

namespace pursuit::testing {

struct Steps {
  long a = 0;  // straight
  long b = 0;  // diagonal
  double value() const { return static_cast<double>(a) + static_cast<double>(b) * std::sqrt(2.0); }
};

// Bellman-Ford relaxation over exact step counts; no priority queue, no shared code.
inline std::vector<std::optional<Steps>> brute_distances(const GridMap& map, Cell src) {
  std::vector<std::optional<Steps>> d(map.cell_count());
  d[map.index(src)] = Steps{};
  bool changed = true;
  while (changed) {
    changed = false;
    for (int r = 0; r < map.height(); ++r) {
      for (int c = 0; c < map.width(); ++c) {
        const auto& here = d[map.index({r, c})];
        if (!here) continue;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const Cell n{r + dr, c + dc};
            if ((dr == 0 && dc == 0) || !map.is_free(n)) continue;
            const bool diag = dr != 0 && dc != 0;
            if (diag && (!map.is_free(Cell{r, c + dc}) || !map.is_free(Cell{r + dr, c}))) continue;
            Steps s = *here;
            (diag ? s.b : s.a) += 1;
            auto& there = d[map.index(n)];
            if (!there || s.value() < there->value()) {
              there = s;
              changed = true;
            }
          }
        }
      }
    }
  }
  return d;
}

inline std::optional<Cell> brute_escape(const GridMap& map, const VisibilityRegion& region, const Pose& pursuer,
                                 const Pose& evader, double r_exclude) {
  const auto d = brute_distances(map, map.world_to_cell(evader.position()));
  std::optional<Cell> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const Cell cell{r, c};
      if (!map.is_free(cell) || region.contains(cell)) continue;
      const Point2 centre = map.cell_to_world(cell);
      if (std::hypot(centre.x - evader.x, centre.y - evader.y) < r_exclude) continue;
      const auto& steps = d[map.index(cell)];
      if (!steps) continue;
      const double sep = std::hypot(centre.x - pursuer.x, centre.y - pursuer.y);
      if (sep <= 0.0) continue;
      const double cost = steps->value() * map.resolution() / sep;
      if (cost < best_cost) {
        best_cost = cost;
        best = cell;
      }
    }
  }
  return best;
}

}  // namespace pursuit::testing
