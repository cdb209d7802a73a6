#include "pursuit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "pursuit/serialization.hpp"

namespace pursuit {

using nlohmann::json;

std::string BehaviorPair::label() const {
  const auto letter = [](Behavior b) { return b == Behavior::kSmart ? 'S' : 'R'; };
  return {letter(pursuer), '-', letter(evader)};
}

BehaviorPair parse_pair(std::string_view label) {
  auto behavior = [&](char c) {
    if (c == 'S' || c == 's') return Behavior::kSmart;
    if (c == 'R' || c == 'r') return Behavior::kRandom;
    throw std::invalid_argument("bad behavior pair '" + std::string(label) + "' (expected e.g. S-R)");
  };
  if (label.size() != 3 || label[1] != '-') {
    throw std::invalid_argument("bad behavior pair '" + std::string(label) + "' (expected e.g. S-R)");
  }
  return {behavior(label[0]), behavior(label[2])};
}

ExperimentMatrix ExperimentMatrix::table_one(std::uint64_t base_seed) {
  ExperimentMatrix m;
  m.maps = {"complex_hall", "enclosed_room", "brick_room"};
  m.ratios = {0.5, 1.0, 2.0};
  m.pairs = {parse_pair("R-R"), parse_pair("S-R"), parse_pair("S-S")};
  m.iterations = 40;
  m.base_seed = base_seed;
  return m;
}

void ExperimentMatrix::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  for (double r : ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("speed ratios must be positive");
  }
  if (maps.empty() || ratios.empty() || pairs.empty()) {
    throw std::invalid_argument("experiment matrix has an empty dimension");
  }
  base.validate();
}

ExperimentMatrix matrix_from_json(const json& j) {
  ExperimentMatrix m = ExperimentMatrix::table_one();
  for (const auto& item : j.items()) {
    const auto& key = item.key();
    if (key != "maps" && key != "ratios" && key != "pairs" && key != "iterations" && key != "base_seed" &&
        key != "game") {
      throw std::invalid_argument("unknown matrix key '" + key + "'");
    }
  }
  if (j.contains("maps")) m.maps = j["maps"].get<std::vector<std::string>>();
  if (j.contains("ratios")) m.ratios = j["ratios"].get<std::vector<double>>();
  if (j.contains("pairs")) {
    m.pairs.clear();
    for (const auto& p : j["pairs"]) m.pairs.push_back(parse_pair(p.get<std::string>()));
  }
  if (j.contains("iterations")) m.iterations = j["iterations"].get<int>();
  if (j.contains("base_seed")) m.base_seed = j["base_seed"].get<std::uint64_t>();
  if (j.contains("game")) m.base = game_config_from_json(j["game"], m.base);
  m.validate();
  return m;
}

std::uint64_t episode_seed(std::uint64_t base_seed, std::string_view map, double ratio,
                           const BehaviorPair& pair, int iteration) {
  std::string key = std::to_string(base_seed);
  key += '|';
  key += map;
  key += '|';
  key += format_number(ratio);
  key += '|';
  key += pair.label();
  key += '|';
  key += std::to_string(iteration);
  return splitmix64(fnv1a64(key));
}

bool ResultRow::same_summary(const ResultRow& o) const {
  return map == o.map && ratio == o.ratio && pair == o.pair && iteration == o.iteration && seed == o.seed &&
         success_rate == o.success_rate && detected_ticks == o.detected_ticks &&
         total_ticks == o.total_ticks && error == o.error;
}

namespace {

std::string sanitize(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

}  // namespace

std::vector<ResultRow> run_batch(const ExperimentMatrix& matrix, const BatchOptions& options) {
  matrix.validate();
  struct Task {
    std::size_t map_index;
    double ratio;
    BehaviorPair pair;
    int iteration;
  };
  std::vector<Task> tasks;
  tasks.reserve(matrix.episode_count());
  for (std::size_t m = 0; m < matrix.maps.size(); ++m) {
    for (double ratio : matrix.ratios) {
      for (const auto& pair : matrix.pairs) {
        for (int it = 0; it < matrix.iterations; ++it) {
          tasks.push_back({m, ratio, pair, it});
        }
      }
    }
  }

  std::vector<std::shared_ptr<const GridMap>> maps;
  for (const auto& id : matrix.maps) {
    GameConfig probe = matrix.base;
    probe.map_id = id;
    probe.map_document.clear();
    maps.push_back(resolve_map(probe));
  }

  std::vector<ResultRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      ResultRow& row = rows[i];
      row.map = matrix.maps[t.map_index];
      row.ratio = t.ratio;
      row.pair = t.pair.label();
      row.iteration = t.iteration;
      row.seed = episode_seed(matrix.base_seed, row.map, t.ratio, t.pair, t.iteration);
      GameConfig cfg = matrix.base;
      cfg.map_id = row.map;
      cfg.map_document.clear();
      cfg.speed_ratio = t.ratio;
      cfg.pursuer_behavior = t.pair.pursuer;
      cfg.evader_behavior = t.pair.evader;
      cfg.seed = row.seed;
      row.total_ticks = cfg.tick_count();
      try {
        EpisodeResult ep = run_episode(cfg, maps[t.map_index]);
        row.success_rate = ep.success_rate;
        row.detected_ticks = ep.detected_ticks;
        if (options.keep_episodes) row.episode = std::move(ep);
      } catch (const SpawnError& e) {
        row.error = sanitize(e.what());
      }
      const std::size_t finished = ++done;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(finished, tasks.size());
      }
    }
  };
  const int threads = std::max(1, options.parallelism);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return rows;
}

double percentile_linear(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows, std::ostream* warnings) {
  struct Bucket {
    std::string map;
    double ratio;
    std::string pair;
    std::vector<double> values;
  };
  std::vector<Bucket> buckets;
  std::map<std::tuple<std::string, double, std::string>, std::size_t> index;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.map, r.ratio, r.pair);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, buckets.size()).first;
      buckets.push_back({r.map, r.ratio, r.pair, {}});
    }
    if (r.error.empty()) buckets[it->second].values.push_back(r.success_rate);
  }

  std::vector<SummaryRow> out;
  for (auto& b : buckets) {
    if (b.values.empty()) {
      if (warnings) {
        *warnings << "warning: no completed episodes for " << b.map << " ratio " << format_number(b.ratio)
                  << " " << b.pair << "; cell omitted\n";
      }
      continue;
    }
    SummaryRow s;
    s.map = b.map;
    s.ratio = b.ratio;
    s.pair = b.pair;
    s.n = b.values.size();
    s.mean = std::accumulate(b.values.begin(), b.values.end(), 0.0) / static_cast<double>(s.n);
    s.std = sample_std(b.values);
    std::vector<double> sorted = b.values;
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    s.q1 = percentile_linear(sorted, 0.25);
    s.median = percentile_linear(sorted, 0.5);
    s.q3 = percentile_linear(sorted, 0.75);
    const double iqr = s.q3 - s.q1;
    for (double v : sorted) {
      if (v < s.q1 - 1.5 * iqr || v > s.q3 + 1.5 * iqr) s.outliers.push_back(v);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "map,ratio,pair,iteration,seed,success_rate,detected_ticks,total_ticks,error\n";
  for (const auto& r : rows) {
    out << r.map << ',' << format_number(r.ratio) << ',' << r.pair << ',' << r.iteration << ',' << r.seed << ','
        << format_number(r.success_rate) << ',' << r.detected_ticks << ',' << r.total_ticks << ','
        << sanitize(r.error) << '\n';
  }
}

namespace {

template <typename T>
T parse_field(const std::string& text, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::runtime_error(std::string("bad ") + what + " field '" + text + "' in results table");
  }
  return value;
}

}  // namespace

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("map,ratio,pair", 0) != 0) {
    throw std::runtime_error("results table is missing its header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 9) {
      throw std::runtime_error("results row has " + std::to_string(fields.size()) + " fields, expected 9");
    }
    ResultRow r;
    r.map = fields[0];
    r.ratio = parse_field<double>(fields[1], "ratio");
    r.pair = fields[2];
    r.iteration = parse_field<int>(fields[3], "iteration");
    r.seed = parse_field<std::uint64_t>(fields[4], "seed");
    r.success_rate = parse_field<double>(fields[5], "success_rate");
    r.detected_ticks = parse_field<int>(fields[6], "detected_ticks");
    r.total_ticks = parse_field<int>(fields[7], "total_ticks");
    r.error = fields[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

json summary_to_json(const std::vector<SummaryRow>& summary) {
  json cells = json::array();
  for (const auto& s : summary) {
    cells.push_back({{"map", s.map},
                     {"ratio", s.ratio},
                     {"pair", s.pair},
                     {"n", s.n},
                     {"mean", s.mean},
                     {"median", s.median},
                     {"q1", s.q1},
                     {"q3", s.q3},
                     {"min", s.min},
                     {"max", s.max},
                     {"std", s.std},
                     {"outliers", s.outliers}});
  }
  return {{"percentile_method", "linear"}, {"std", "sample"}, {"cells", std::move(cells)}};
}

void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << std::left << std::setw(15) << "map" << std::setw(7) << "ratio" << std::setw(6) << "pair" << std::right
      << std::setw(5) << "n" << std::setw(9) << "mean" << std::setw(9) << "median" << std::setw(9) << "q1"
      << std::setw(9) << "q3" << std::setw(9) << "min" << std::setw(9) << "max" << std::setw(9) << "std"
      << std::setw(10) << "outliers" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& s : summary) {
    out << std::left << std::setw(15) << s.map << std::setw(7) << format_number(s.ratio) << std::setw(6) << s.pair
        << std::right << std::setw(5) << s.n << std::setw(9) << s.mean << std::setw(9) << s.median << std::setw(9)
        << s.q1 << std::setw(9) << s.q3 << std::setw(9) << s.min << std::setw(9) << s.max << std::setw(9) << s.std
        << std::setw(10) << s.outliers.size() << '\n';
  }
  out << std::defaultfloat;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  out << "map,ratio,pair,n,mean,median,q1,q3,min,max,std,outliers\n";
  for (const auto& s : summary) {
    out << s.map << ',' << format_number(s.ratio) << ',' << s.pair << ',' << s.n << ',' << format_number(s.mean)
        << ',' << format_number(s.median) << ',' << format_number(s.q1) << ',' << format_number(s.q3) << ','
        << format_number(s.min) << ',' << format_number(s.max) << ',' << format_number(s.std) << ',';
    for (std::size_t i = 0; i < s.outliers.size(); ++i) {
      out << (i ? ";" : "") << format_number(s.outliers[i]);
    }
    out << '\n';
  }
}

std::string episode_stem(const ResultRow& row) {
  std::string ratio = format_number(row.ratio);
  std::replace(ratio.begin(), ratio.end(), '.', 'p');
  return row.map + "_r" + ratio + "_" + row.pair + "_i" + std::to_string(row.iteration);
}

void export_results(const std::vector<ResultRow>& rows, const std::filesystem::path& dir, bool trajectories) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(dir / "results.csv");
    write_results_csv(f, rows);
  }
  {
    auto f = open(dir / "summary.json");
    f << summary_to_json(summarize(rows)).dump(2) << '\n';
  }
  if (!trajectories) return;
  std::filesystem::create_directories(dir / "trajectories", ec);
  std::filesystem::create_directories(dir / "episodes", ec);
  if (ec) throw std::runtime_error("cannot create trajectory directories under " + dir.string());
  for (const auto& r : rows) {
    if (!r.episode) continue;
    const auto stem = episode_stem(r);
    auto t = open(dir / "trajectories" / (stem + ".csv"));
    write_trajectory_csv(t, *r.episode);
    auto e = open(dir / "episodes" / (stem + ".json"));
    e << to_json(*r.episode).dump(2) << '\n';
  }
}

}  // namespace pursuit
