#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pursuit/agents.hpp"
#include "pursuit/grid_map.hpp"
#include "pursuit/visibility.hpp"

namespace pursuit {

struct GameConfig {
  /// Builtin map name or path to a map file. Ignored when map_document is set.
  std::string map_id = "complex_hall";
  std::string map_document;
  double t_max = 90.0;
  double dt = 1.0;
  double v_e = 0.4;
  double speed_ratio = 1.0;
  Behavior pursuer_behavior = Behavior::kSmart;
  Behavior evader_behavior = Behavior::kRandom;
  SensorModel sensor;
  FilterConfig filter;
  std::uint64_t seed = 0;
  double agent_radius = 0.2;
  /// Probability that the pursuer's perception misses a visible evader on a tick. Scoring
  /// always uses the exact detection test.
  double detection_failure_prob = 0.0;
  PolicyParams policy;

  double v_p() const { return speed_ratio * v_e; }
  int tick_count() const;
  void validate() const;
};

struct TickRecord {
  int k = 0;
  Pose pursuer;
  Pose evader;
  bool detected = false;
  PursuerMode pursuer_mode = PursuerMode::kExternal;
  std::optional<Pose> filter_estimate;

  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

struct EpisodeResult {
  std::string map_id;
  std::uint64_t seed = 0;
  std::string config_digest;
  Pose pursuer_start;
  Pose evader_start;
  std::vector<TickRecord> ticks;
  int detected_ticks = 0;
  double success_rate = 0.0;

  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

/// Resolves the map a config refers to. Builtin maps are shared, others are loaded.
std::shared_ptr<const GridMap> resolve_map(const GameConfig& config);

/// Uniform free poses for both agents, redrawn until the pursuer detects the evader and both
/// discs are clear of obstacles and of each other. Throws SpawnError after 10,000 attempts.
std::pair<Pose, Pose> spawn(const GridMap& map, const SensorModel& sensor, double radius, Rng& rng);

using PolicyFactory = std::function<std::unique_ptr<Policy>(const GameConfig&)>;

/// Replacements for the configured behaviours (tests, live sessions).
struct PolicyOverrides {
  PolicyFactory pursuer;
  PolicyFactory evader;
};

/// Builds the configured behaviour for one role with its own RNG substream.
std::unique_ptr<Policy> make_policy(const GameConfig& config, Role role);

/// One game: evader moves first, then the pursuer observes the moved evader and moves, then
/// detection is scored on the end-of-tick poses.
class Game {
 public:
  explicit Game(GameConfig config, PolicyOverrides overrides = {});
  Game(GameConfig config, std::shared_ptr<const GridMap> map, PolicyOverrides overrides = {});

  bool finished() const { return tick_ >= config_.tick_count(); }
  int tick() const { return tick_; }
  const TickRecord& step();

  const GameConfig& config() const { return config_; }
  const GridMap& map() const { return *map_; }
  const NavGrid& nav() const { return nav_; }
  const Pose& pursuer() const { return pursuer_; }
  const Pose& evader() const { return evader_; }
  const std::vector<TickRecord>& records() const { return records_; }
  int detected_ticks() const { return detected_ticks_; }
  double success_rate_so_far() const;
  /// Pursuer's visibility region at its current pose.
  VisibilityRegion pursuer_region() const;
  const Policy& pursuer_policy() const { return *pursuer_policy_; }
  const Policy& evader_policy() const { return *evader_policy_; }

  /// Test hook: relocates the evader without going through its policy.
  void set_evader_pose(const Pose& pose);

  EpisodeResult result() const;

 private:
  void begin();

  GameConfig config_;
  std::shared_ptr<const GridMap> map_;
  NavGrid nav_;
  std::unique_ptr<Policy> pursuer_policy_;
  std::unique_ptr<Policy> evader_policy_;
  Rng perception_rng_;
  Pose pursuer_;
  Pose evader_;
  Pose pursuer_start_;
  Pose evader_start_;
  int tick_ = 0;
  int detected_ticks_ = 0;
  std::vector<TickRecord> records_;
  std::string digest_;
};

EpisodeResult run_episode(const GameConfig& config, const PolicyOverrides& overrides = {});
EpisodeResult run_episode(const GameConfig& config, std::shared_ptr<const GridMap> map,
                          const PolicyOverrides& overrides = {});

}  // namespace pursuit
