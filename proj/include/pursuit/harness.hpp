#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pursuit/engine.hpp"

namespace pursuit {

struct BehaviorPair {
  Behavior pursuer = Behavior::kSmart;
  Behavior evader = Behavior::kRandom;

  /// "R-R", "S-R", "S-S" or "R-S".
  std::string label() const;
  friend bool operator==(const BehaviorPair&, const BehaviorPair&) = default;
};

BehaviorPair parse_pair(std::string_view label);

struct ExperimentMatrix {
  std::vector<std::string> maps;
  std::vector<double> ratios;
  std::vector<BehaviorPair> pairs;
  int iterations = 40;
  std::uint64_t base_seed = 0;
  /// Template for every episode; map, ratio, behaviours and seed are overwritten per cell.
  GameConfig base;

  /// Three builtin maps x {0.5, 1, 2} x {R-R, S-R, S-S} x 40 iterations.
  static ExperimentMatrix table_one(std::uint64_t base_seed = 2020);
  void validate() const;
  std::size_t episode_count() const { return maps.size() * ratios.size() * pairs.size() * static_cast<std::size_t>(iterations); }
};

ExperimentMatrix matrix_from_json(const nlohmann::json& j);

/// Seed of one episode, derived only from its own coordinates so that extending the matrix
/// never changes existing cells.
std::uint64_t episode_seed(std::uint64_t base_seed, std::string_view map, double ratio,
                           const BehaviorPair& pair, int iteration);

struct ResultRow {
  std::string map;
  double ratio = 0.0;
  std::string pair;
  int iteration = 0;
  std::uint64_t seed = 0;
  double success_rate = 0.0;
  int detected_ticks = 0;
  int total_ticks = 0;
  /// Non-empty when the episode could not run (e.g. spawn failure).
  std::string error;
  std::optional<EpisodeResult> episode;

  bool same_summary(const ResultRow& other) const;
};

struct BatchOptions {
  int parallelism = 1;
  bool keep_episodes = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Runs every (map, ratio, pair, iteration) cell. Rows come back in matrix order regardless of
/// parallelism or completion order.
std::vector<ResultRow> run_batch(const ExperimentMatrix& matrix, const BatchOptions& options = {});

struct SummaryRow {
  std::string map;
  double ratio = 0.0;
  std::string pair;
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  double std = 0.0;
  std::vector<double> outliers;
};

/// Percentile of sorted data by linear interpolation between order statistics at
/// h = (n - 1) * p.
double percentile_linear(const std::vector<double>& sorted, double p);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_std(const std::vector<double>& values);

/// Five-number summary, mean, std and 1.5 IQR outliers per (map, ratio, pair) cell, in first
/// appearance order. Failed episodes are skipped; cells with no usable rows are omitted and a
/// warning is written to `warnings` when given.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows, std::ostream* warnings = nullptr);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);
nlohmann::json summary_to_json(const std::vector<SummaryRow>& summary);
void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& summary);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);

/// File stem used for one episode's trajectory and record.
std::string episode_stem(const ResultRow& row);

/// Writes results.csv and summary.json into `dir`, plus trajectories/<stem>.csv and
/// episodes/<stem>.json for rows that carry an episode when `trajectories` is set. Throws
/// std::runtime_error when the directory cannot be written.
void export_results(const std::vector<ResultRow>& rows, const std::filesystem::path& dir, bool trajectories);

}  // namespace pursuit
