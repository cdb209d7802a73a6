#include "pursuit/live/protocol.hpp"

#include "pursuit/serialization.hpp"

namespace pursuit::live {

using nlohmann::json;

std::string_view to_string(Viewer viewer) {
  switch (viewer) {
    case Viewer::kEvader:
      return "evader";
    case Viewer::kPursuer:
      return "pursuer";
    case Viewer::kSpectator:
      return "spectator";
  }
  return "spectator";
}

Viewer parse_viewer(std::string_view text) {
  if (text == "evader") return Viewer::kEvader;
  if (text == "pursuer") return Viewer::kPursuer;
  if (text == "spectator") return Viewer::kSpectator;
  throw ProtocolError("bad_request", "unknown role '" + std::string(text) + "'");
}

SessionConfig session_config_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("invalid_config", "config must be an object");
  json game = j;
  SessionConfig out;
  if (game.contains("real_time_scale")) {
    if (!game["real_time_scale"].is_number()) throw ProtocolError("invalid_config", "real_time_scale must be a number");
    out.real_time_scale = game["real_time_scale"].get<double>();
    game.erase("real_time_scale");
    if (!(out.real_time_scale > 0.0) || out.real_time_scale > 100.0) {
      throw ProtocolError("invalid_config", "real_time_scale must be in (0, 100]");
    }
  }
  auto is_human = [&](const char* key) { return game.contains(key) && game[key] == "human"; };
  const bool pursuer_human = is_human("pursuer");
  const bool evader_human = is_human("evader");
  if (pursuer_human && evader_human) {
    throw ProtocolError("invalid_config", "at most one role may be human");
  }
  if (!pursuer_human && !evader_human) {
    throw ProtocolError("invalid_config", "one role must be human");
  }
  out.human = pursuer_human ? Role::kPursuer : Role::kEvader;
  // The human slot replaces the policy; keep the behaviour field parseable.
  game[pursuer_human ? "pursuer" : "evader"] = "smart";
  try {
    out.game = game_config_from_json(game);
    out.game.validate();
  } catch (const std::exception& e) {
    throw ProtocolError("invalid_config", e.what());
  }
  return out;
}

namespace {

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ProtocolError("bad_request", std::string("missing numeric field '") + key + "'");
  }
  return j[key].get<double>();
}

std::string string_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw ProtocolError("bad_request", std::string("missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError("bad_request", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("bad_request", "message must be an object");
  const std::string type = string_field(j, "type");
  if (type == "create") {
    if (!j.contains("config")) throw ProtocolError("bad_request", "create needs a config");
    return msg::Create{session_config_from_json(j["config"])};
  }
  if (type == "join") return msg::Join{string_field(j, "session_id"), parse_viewer(string_field(j, "role"))};
  if (type == "command") return msg::Command{{number_field(j, "v"), number_field(j, "omega")}};
  if (type == "goal") return msg::Goal{{number_field(j, "x"), number_field(j, "y")}};
  if (type == "pause") return msg::Pause{};
  if (type == "resume") return msg::Resume{};
  throw ProtocolError("bad_request", "unknown message type '" + type + "'");
}

json error_message(const std::string& code, const std::string& message) {
  return {{"type", "error"}, {"code", code}, {"message", message}};
}

json map_to_json(const GridMap& map) {
  json rows = json::array();
  for (int r = 0; r < map.height(); ++r) {
    std::string row(static_cast<std::size_t>(map.width()), '.');
    for (int c = 0; c < map.width(); ++c) {
      if (map.occupied(Cell{r, c})) row[static_cast<std::size_t>(c)] = '#';
    }
    rows.push_back(std::move(row));
  }
  return {{"width", map.width()},
          {"height", map.height()},
          {"resolution", map.resolution()},
          {"origin", {map.origin().x, map.origin().y}},
          {"rows", std::move(rows)}};
}

}  // namespace pursuit::live
