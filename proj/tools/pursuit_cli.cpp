#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pursuit/engine.hpp"
#include "pursuit/harness.hpp"
#include "pursuit/map_io.hpp"
#include "pursuit/serialization.hpp"

namespace {

using namespace pursuit;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

void render_frame(std::ostream& out, const Game& game, const TickRecord& rec) {
  const GridMap& map = game.map();
  const VisibilityRegion region = game.pursuer_region();
  const Cell p = map.world_to_cell(rec.pursuer.position());
  const Cell e = map.world_to_cell(rec.evader.position());
  out << "tick " << rec.k << "  detected " << (rec.detected ? "yes" : "no") << "  success "
      << format_number(game.success_rate_so_far()) << "  mode " << to_string(rec.pursuer_mode) << '\n';
  for (int r = 0; r < map.height(); ++r) {
    std::string line(static_cast<std::size_t>(map.width()), ' ');
    for (int c = 0; c < map.width(); ++c) {
      const Cell cell{r, c};
      char ch = map.occupied(cell) ? '#' : '.';
      if (region.contains(cell)) ch = '+';
      if (cell == e) ch = 'E';
      if (cell == p) ch = 'P';
      line[static_cast<std::size_t>(c)] = ch;
    }
    out << line << '\n';
  }
  out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pursuit-evasion simulator on occupancy grids"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment matrix");
  std::string matrix_file;
  std::vector<std::string> maps;
  std::vector<double> ratios;
  std::vector<std::string> pairs;
  int iterations = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = "results";
  int parallelism = 1;
  bool emit_trajectories = false;
  bool quiet = false;
  run->add_option("--matrix", matrix_file, "JSON experiment/game config")->check(CLI::ExistingFile);
  run->add_option("--map", maps, "Map id or map file (repeatable)");
  run->add_option("--ratio", ratios, "Speed ratio v_p/v_e (repeatable)");
  run->add_option("--pair", pairs, "Behaviour pair such as S-R (repeatable)");
  run->add_option("--iterations", iterations, "Episodes per cell")->check(CLI::PositiveNumber);
  run->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { seed = s; seed_set = true; }, "Base seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--emit-trajectories", emit_trajectories, "Write per-episode trajectories");
  run->add_flag("--quiet", quiet, "No progress output");

  auto* summarize_cmd = app.add_subcommand("summarize", "Summarize a results table");
  std::string in_path;
  std::string format = "table";
  summarize_cmd->add_option("--in", in_path, "results.csv or a directory containing it")->required();
  summarize_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "table"}));

  auto* play = app.add_subcommand("play", "Run one episode");
  std::string config_file;
  std::string play_map = "complex_hall";
  double play_ratio = 1.0;
  std::string play_pair = "S-R";
  std::uint64_t play_seed = 0;
  std::string render = "none";
  play->add_option("--config", config_file, "JSON game config")->check(CLI::ExistingFile);
  play->add_option("--map", play_map, "Map id or map file");
  play->add_option("--ratio", play_ratio, "Speed ratio v_p/v_e");
  play->add_option("--pair", play_pair, "Behaviour pair such as S-R");
  play->add_option("--seed", play_seed, "Episode seed");
  play->add_option("--render", render, "Rendering")->check(CLI::IsMember({"none", "text-frames"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentMatrix matrix = ExperimentMatrix::table_one();
      if (!matrix_file.empty()) matrix = matrix_from_json(read_json_file(matrix_file));
      if (!maps.empty()) matrix.maps = maps;
      if (!ratios.empty()) matrix.ratios = ratios;
      if (!pairs.empty()) {
        matrix.pairs.clear();
        for (const auto& p : pairs) matrix.pairs.push_back(parse_pair(p));
      }
      if (iterations > 0) matrix.iterations = iterations;
      if (seed_set) matrix.base_seed = seed;
      matrix.validate();

      BatchOptions options;
      options.parallelism = parallelism;
      options.keep_episodes = emit_trajectories;
      if (!quiet) {
        options.progress = [](std::size_t done, std::size_t total) {
          if (done % 20 == 0 || done == total) std::cerr << "\r" << done << "/" << total << std::flush;
        };
      }
      const auto rows = run_batch(matrix, options);
      if (!quiet) std::cerr << '\n';
      for (const auto& r : rows) {
        if (!r.error.empty()) std::cerr << "episode failed: " << episode_stem(r) << ": " << r.error << '\n';
      }
      export_results(rows, out_dir, emit_trajectories);
      write_summary_table(std::cout, summarize(rows, &std::cerr));
      return 0;
    }
    if (*summarize_cmd) {
      std::filesystem::path path = in_path;
      if (std::filesystem::is_directory(path)) path /= "results.csv";
      std::ifstream in(path);
      if (!in) throw std::runtime_error("cannot open " + path.string());
      const auto summary = summarize(read_results_csv(in), &std::cerr);
      if (format == "csv") {
        write_summary_csv(std::cout, summary);
      } else {
        write_summary_table(std::cout, summary);
      }
      return 0;
    }
    if (*play) {
      GameConfig config;
      if (!config_file.empty()) config = game_config_from_json(read_json_file(config_file));
      if (config_file.empty() || play->count("--map")) config.map_id = play_map;
      if (config_file.empty() || play->count("--ratio")) config.speed_ratio = play_ratio;
      if (config_file.empty() || play->count("--pair")) {
        const auto pair = parse_pair(play_pair);
        config.pursuer_behavior = pair.pursuer;
        config.evader_behavior = pair.evader;
      }
      if (config_file.empty() || play->count("--seed")) config.seed = play_seed;
      Game game(config);
      while (!game.finished()) {
        const TickRecord& rec = game.step();
        if (render == "text-frames") render_frame(std::cout, game, rec);
      }
      const EpisodeResult result = game.result();
      std::cout << "success_rate " << format_number(result.success_rate) << " (" << result.detected_ticks << "/"
                << result.ticks.size() << " ticks)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
