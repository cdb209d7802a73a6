#include "pursuit/map_io.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pursuit {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_maps();
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    lines.push_back(line);
    if (end == std::string_view::npos) {
      break;
    }
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) {
    lines.pop_back();
  }
  return lines;
}

double parse_double(std::string_view token, std::string_view what) {
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw MapFormatError("invalid " + std::string(what) + ": '" + std::string(token) + "'");
  }
  return value;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace

GridMap load_map(std::string_view text) {
  auto lines = split_lines(text);
  std::size_t first = 0;
  while (first < lines.size() && lines[first].empty()) {
    ++first;
  }
  double resolution = kDefaultResolution;
  constexpr std::string_view kHeader = "resolution";
  if (first < lines.size() && lines[first].starts_with(kHeader)) {
    std::string_view rest = lines[first].substr(kHeader.size());
    const auto begin = rest.find_first_not_of(" \t");
    if (begin == std::string_view::npos || begin == 0) {
      throw MapFormatError("malformed resolution header");
    }
    rest = rest.substr(begin);
    rest = rest.substr(0, rest.find_last_not_of(" \t") + 1);
    resolution = parse_double(rest, "resolution");
    if (!(resolution > 0.0)) {
      throw MapFormatError("resolution must be positive");
    }
    ++first;
  }
  if (first >= lines.size()) {
    throw MapFormatError("map has zero rows");
  }
  const std::size_t width = lines[first].size();
  if (width == 0) {
    throw MapFormatError("map has zero columns");
  }
  const std::size_t height = lines.size() - first;
  std::vector<std::uint8_t> occupancy;
  occupancy.reserve(width * height);
  for (std::size_t r = 0; r < height; ++r) {
    const auto line = lines[first + r];
    if (line.size() != width) {
      throw MapFormatError("ragged map: row " + std::to_string(r) + " has " +
                           std::to_string(line.size()) + " columns, expected " + std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      switch (line[c]) {
        case '#': occupancy.push_back(1); break;
        case '.': occupancy.push_back(0); break;
        default:
          throw MapFormatError("unknown map character '" + std::string(1, line[c]) + "' at row " +
                               std::to_string(r) + ", column " + std::to_string(c));
      }
    }
  }
  return GridMap(static_cast<int>(width), static_cast<int>(height), resolution, {}, std::move(occupancy));
}

std::string serialize_map(const GridMap& map) {
  std::string out = "resolution " + format_double(map.resolution()) + "\n";
  out.reserve(out.size() + map.cell_count() + static_cast<std::size_t>(map.height()));
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      out.push_back(map.occupied({r, c}) ? '#' : '.');
    }
    out.push_back('\n');
  }
  return out;
}

GridMap load_pgm(const std::filesystem::path& image, double resolution, Point2 origin, int threshold) {
  std::ifstream in(image, std::ios::binary);
  if (!in) {
    throw MapFormatError("cannot open raster " + image.string());
  }
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") {
    throw MapFormatError("unsupported raster format '" + magic + "' (expected PGM P2/P5)");
  }
  auto next_int = [&in, &image]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    int value = 0;
    if (!(in >> value)) {
      throw MapFormatError("truncated PGM header in " + image.string());
    }
    return value;
  };
  const int width = next_int();
  const int height = next_int();
  const int maxval = next_int();
  if (width < 1 || height < 1) {
    throw MapFormatError("raster has zero dimensions");
  }
  if (maxval < 1 || maxval > 255) {
    throw MapFormatError("only 8-bit PGM rasters are supported");
  }
  std::vector<std::uint8_t> occupancy(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    std::vector<char> pixels(occupancy.size());
    if (!in.read(pixels.data(), static_cast<std::streamsize>(pixels.size()))) {
      throw MapFormatError("truncated PGM pixel data in " + image.string());
    }
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      occupancy[i] = static_cast<unsigned char>(pixels[i]) < threshold ? 1 : 0;
    }
  } else {
    for (auto& cell : occupancy) {
      cell = next_int() < threshold ? 1 : 0;
    }
  }
  return GridMap(width, height, resolution, origin, std::move(occupancy));
}

GridMap load_raster_map(const std::filesystem::path& metadata) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(metadata.string());
  } catch (const YAML::Exception& e) {
    throw MapFormatError("cannot read map metadata " + metadata.string() + ": " + e.what());
  }
  if (!doc["image"] || !doc["resolution"]) {
    throw MapFormatError("map metadata requires 'image' and 'resolution'");
  }
  Point2 origin{};
  if (auto o = doc["origin"]) {
    if (!o.IsSequence() || o.size() < 2) {
      throw MapFormatError("map metadata 'origin' must be a list [x, y, ...]");
    }
    origin = {o[0].as<double>(), o[1].as<double>()};
  }
  const int threshold = doc["occupancy_threshold"] ? doc["occupancy_threshold"].as<int>() : 128;
  std::filesystem::path image = doc["image"].as<std::string>();
  if (image.is_relative()) {
    image = metadata.parent_path() / image;
  }
  return load_pgm(image, doc["resolution"].as<double>(), origin, threshold);
}

GridMap load_map_file(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".yaml" || ext == ".yml") {
    return load_raster_map(path);
  }
  std::ifstream in(path);
  if (!in) {
    throw MapFormatError("cannot open map file " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return load_map(text.str());
}

const std::vector<NamedMap>& builtin_maps() {
  static const std::vector<NamedMap> maps = [] {
    // Shipped in presentation order, not alphabetical.
    constexpr std::string_view kOrder[] = {"complex_hall", "enclosed_room", "brick_room"};
    std::vector<NamedMap> out;
    for (auto name : kOrder) {
      for (const auto& [embedded_name, text] : detail::embedded_maps()) {
        if (embedded_name == name) {
          out.push_back({std::string(name), load_map(text)});
        }
      }
    }
    return out;
  }();
  return maps;
}

const GridMap& builtin_map(std::string_view name) {
  for (const auto& m : builtin_maps()) {
    if (m.name == name) {
      return m.map;
    }
  }
  throw std::invalid_argument("unknown builtin map '" + std::string(name) + "'");
}

}  // namespace pursuit
