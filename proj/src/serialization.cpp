#include "pursuit/serialization.hpp"

#include <charconv>
#include <cstdio>
#include <ostream>
#include <set>

namespace pursuit {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) {
    throw std::invalid_argument(std::string(what) + " must be an object");
  }
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) {
      throw std::invalid_argument(std::string("unknown ") + what + " key '" + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) {
    field = it->get<T>();
  }
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

json pose_to_json(const Pose& pose) { return json::array({pose.x, pose.y, pose.theta}); }

Pose pose_from_json(const json& j) {
  if (j.is_array() && j.size() == 3) {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  }
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.value("theta", 0.0)};
}

json to_json(const SensorModel& s) {
  return {{"fov", s.fov}, {"dist_min", s.dist_min}, {"dist_max", s.dist_max},
          {"angle_step", s.angle_step}, {"distance_step", s.distance_step}};
}

json to_json(const FilterConfig& f) {
  return {{"n_particles", f.n_particles},
          {"rho", f.rho},
          {"v_max", f.v_max},
          {"omega_max", f.omega_max},
          {"position_jitter_sigma", f.position_jitter_sigma},
          {"reinit_sigma", f.reinit_sigma},
          {"in_region_factor_when_unseen", f.in_region_factor_when_unseen},
          {"out_region_factor_when_seen", f.out_region_factor_when_seen}};
}

namespace {

json policy_to_json(const PolicyParams& p) {
  return {{"omega_max", p.omega_max},     {"lookahead", p.lookahead},
          {"arrival_tolerance", p.arrival_tolerance}, {"stall_ticks", p.stall_ticks},
          {"standoff", p.standoff},       {"k_omega", p.k_omega},
          {"k_omega_image", p.k_omega_image},
          {"k_v", p.k_v},                 {"image_width", p.image_width},
          {"target_radius", p.target_radius}, {"r_exclude", p.escape.r_exclude},
          {"escape_stride", p.escape.stride}, {"d_safe", p.d_safe}};
}

PolicyParams policy_from_json(const json& j, PolicyParams p) {
  reject_unknown(j,
                 {"omega_max", "lookahead", "arrival_tolerance", "stall_ticks", "standoff", "k_omega", "k_omega_image", "k_v",
                  "image_width", "target_radius", "r_exclude", "escape_stride", "d_safe"},
                 "policy");
  read(j, "omega_max", p.omega_max);
  read(j, "lookahead", p.lookahead);
  read(j, "arrival_tolerance", p.arrival_tolerance);
  read(j, "stall_ticks", p.stall_ticks);
  read(j, "standoff", p.standoff);
  read(j, "k_omega", p.k_omega);
  read(j, "k_omega_image", p.k_omega_image);
  read(j, "k_v", p.k_v);
  read(j, "image_width", p.image_width);
  read(j, "target_radius", p.target_radius);
  read(j, "r_exclude", p.escape.r_exclude);
  read(j, "escape_stride", p.escape.stride);
  read(j, "d_safe", p.d_safe);
  return p;
}

}  // namespace

json to_json(const GameConfig& c) {
  return {{"map", c.map_id},
          {"map_document", c.map_document},
          {"t_max", c.t_max},
          {"dt", c.dt},
          {"v_e", c.v_e},
          {"speed_ratio", c.speed_ratio},
          {"pursuer", std::string(to_string(c.pursuer_behavior))},
          {"evader", std::string(to_string(c.evader_behavior))},
          {"sensor", to_json(c.sensor)},
          {"filter", to_json(c.filter)},
          {"seed", c.seed},
          {"agent_radius", c.agent_radius},
          {"detection_failure_prob", c.detection_failure_prob},
          {"policy", policy_to_json(c.policy)}};
}

SensorModel sensor_from_json(const json& j, SensorModel s) {
  reject_unknown(j, {"fov", "dist_min", "dist_max", "angle_step", "distance_step"}, "sensor");
  read(j, "fov", s.fov);
  read(j, "dist_min", s.dist_min);
  read(j, "dist_max", s.dist_max);
  read(j, "angle_step", s.angle_step);
  read(j, "distance_step", s.distance_step);
  return s;
}

FilterConfig filter_from_json(const json& j, FilterConfig f) {
  reject_unknown(j,
                 {"n_particles", "rho", "v_max", "omega_max", "position_jitter_sigma", "reinit_sigma",
                  "in_region_factor_when_unseen", "out_region_factor_when_seen"},
                 "filter");
  read(j, "n_particles", f.n_particles);
  read(j, "rho", f.rho);
  read(j, "v_max", f.v_max);
  read(j, "omega_max", f.omega_max);
  read(j, "position_jitter_sigma", f.position_jitter_sigma);
  read(j, "reinit_sigma", f.reinit_sigma);
  read(j, "in_region_factor_when_unseen", f.in_region_factor_when_unseen);
  read(j, "out_region_factor_when_seen", f.out_region_factor_when_seen);
  return f;
}

GameConfig game_config_from_json(const json& j, GameConfig c) {
  reject_unknown(j,
                 {"map", "map_document", "t_max", "dt", "v_e", "speed_ratio", "pursuer", "evader", "sensor",
                  "filter", "seed", "agent_radius", "detection_failure_prob", "policy"},
                 "game config");
  read(j, "map", c.map_id);
  read(j, "map_document", c.map_document);
  read(j, "t_max", c.t_max);
  read(j, "dt", c.dt);
  read(j, "v_e", c.v_e);
  read(j, "speed_ratio", c.speed_ratio);
  if (j.contains("pursuer")) c.pursuer_behavior = parse_behavior(j["pursuer"].get<std::string>());
  if (j.contains("evader")) c.evader_behavior = parse_behavior(j["evader"].get<std::string>());
  if (j.contains("sensor")) c.sensor = sensor_from_json(j["sensor"], c.sensor);
  if (j.contains("filter")) c.filter = filter_from_json(j["filter"], c.filter);
  read(j, "seed", c.seed);
  read(j, "agent_radius", c.agent_radius);
  read(j, "detection_failure_prob", c.detection_failure_prob);
  if (j.contains("policy")) c.policy = policy_from_json(j["policy"], c.policy);
  return c;
}

std::string config_digest(const GameConfig& config) {
  json j = to_json(config);
  j.erase("seed");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

json to_json(const EpisodeResult& r) {
  json ticks = json::array();
  for (const auto& t : r.ticks) {
    ticks.push_back({{"k", t.k},
                     {"pursuer", pose_to_json(t.pursuer)},
                     {"evader", pose_to_json(t.evader)},
                     {"detected", t.detected},
                     {"mode", std::string(to_string(t.pursuer_mode))},
                     {"estimate", t.filter_estimate ? pose_to_json(*t.filter_estimate) : json(nullptr)}});
  }
  return {{"map", r.map_id},
          {"seed", r.seed},
          {"config_digest", r.config_digest},
          {"pursuer_start", pose_to_json(r.pursuer_start)},
          {"evader_start", pose_to_json(r.evader_start)},
          {"detected_ticks", r.detected_ticks},
          {"success_rate", r.success_rate},
          {"ticks", std::move(ticks)}};
}

EpisodeResult episode_from_json(const json& j) {
  EpisodeResult r;
  r.map_id = j.at("map").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.pursuer_start = pose_from_json(j.at("pursuer_start"));
  r.evader_start = pose_from_json(j.at("evader_start"));
  r.detected_ticks = j.at("detected_ticks").get<int>();
  r.success_rate = j.at("success_rate").get<double>();
  for (const auto& t : j.at("ticks")) {
    TickRecord rec;
    rec.k = t.at("k").get<int>();
    rec.pursuer = pose_from_json(t.at("pursuer"));
    rec.evader = pose_from_json(t.at("evader"));
    rec.detected = t.at("detected").get<bool>();
    rec.pursuer_mode = parse_pursuer_mode(t.at("mode").get<std::string>());
    if (!t.at("estimate").is_null()) rec.filter_estimate = pose_from_json(t.at("estimate"));
    r.ticks.push_back(rec);
  }
  return r;
}

void write_trajectory_csv(std::ostream& out, const EpisodeResult& result) {
  out << "tick,pursuer_x,pursuer_y,pursuer_theta,evader_x,evader_y,evader_theta,detected,pursuer_mode,"
         "estimate_x,estimate_y\n";
  for (const auto& t : result.ticks) {
    out << t.k << ',' << format_number(t.pursuer.x) << ',' << format_number(t.pursuer.y) << ','
        << format_number(t.pursuer.theta) << ',' << format_number(t.evader.x) << ','
        << format_number(t.evader.y) << ',' << format_number(t.evader.theta) << ',' << (t.detected ? 1 : 0)
        << ',' << to_string(t.pursuer_mode) << ',';
    if (t.filter_estimate) {
      out << format_number(t.filter_estimate->x) << ',' << format_number(t.filter_estimate->y);
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace pursuit
