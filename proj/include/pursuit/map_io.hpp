#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pursuit/grid_map.hpp"

namespace pursuit {

inline constexpr double kDefaultResolution = 0.1;

/// Parses the ASCII map format: an optional `resolution <float>` header line followed by
/// H rows of W characters, '#' occupied and '.' free. Throws MapFormatError.
GridMap load_map(std::string_view text);

/// Inverse of load_map. The output always carries the resolution header.
std::string serialize_map(const GridMap& map);

/// 8-bit grayscale PGM (P2 or P5). Pixels darker than `threshold` are occupied. Image row 0
/// becomes grid row 0, matching the ASCII convention.
GridMap load_pgm(const std::filesystem::path& image, double resolution, Point2 origin,
                 int threshold = 128);

/// Raster + sidecar metadata (YAML keys: image, resolution, origin [x, y], occupancy_threshold).
GridMap load_raster_map(const std::filesystem::path& metadata);

/// Dispatches on extension: .yaml/.yml -> raster, anything else -> ASCII.
GridMap load_map_file(const std::filesystem::path& path);

struct NamedMap {
  std::string name;
  GridMap map;
};

/// The shipped environments: complex_hall, enclosed_room, brick_room.
const std::vector<NamedMap>& builtin_maps();

/// Looks up a builtin map by name; throws std::invalid_argument for unknown names.
const GridMap& builtin_map(std::string_view name);

}  // namespace pursuit
