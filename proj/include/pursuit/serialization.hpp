#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "pursuit/engine.hpp"

namespace pursuit {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SensorModel& sensor);
nlohmann::json to_json(const FilterConfig& filter);
nlohmann::json to_json(const GameConfig& config);

/// Applies the keys present in `j` on top of `base`. Unknown keys throw std::invalid_argument.
SensorModel sensor_from_json(const nlohmann::json& j, SensorModel base = {});
FilterConfig filter_from_json(const nlohmann::json& j, FilterConfig base = {});
GameConfig game_config_from_json(const nlohmann::json& j, GameConfig base = {});

/// Stable hex digest of every config field except the seed.
std::string config_digest(const GameConfig& config);

nlohmann::json to_json(const EpisodeResult& result);
EpisodeResult episode_from_json(const nlohmann::json& j);

/// Compact per-tick table: tick, pursuer x/y/theta, evader x/y/theta, detected, mode,
/// estimate x/y (empty when absent).
void write_trajectory_csv(std::ostream& out, const EpisodeResult& result);

}  // namespace pursuit
