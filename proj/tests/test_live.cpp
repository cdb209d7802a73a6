#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "pursuit/live/server.hpp"
#include "pursuit/live/session.hpp"
#include "pursuit/map_io.hpp"
#include "pursuit/serialization.hpp"
#include "pursuit/version.hpp"

namespace pursuit::live {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using asio::ip::tcp;
using nlohmann::json;

SessionConfig evader_session(std::uint64_t seed = 3, const char* map = "enclosed_room") {
  return session_config_from_json(json{{"map", map}, {"evader", "human"}, {"pursuer", "smart"}, {"seed", seed}});
}

TEST(Protocol, ExactlyOneHumanRole) {
  EXPECT_EQ(evader_session().human, Role::kEvader);
  EXPECT_EQ(session_config_from_json(json{{"pursuer", "human"}}).human, Role::kPursuer);
  try {
    session_config_from_json(json{{"pursuer", "human"}, {"evader", "human"}});
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), "invalid_config");
  }
  EXPECT_THROW(session_config_from_json(json{{"pursuer", "smart"}}), ProtocolError);
  EXPECT_THROW(session_config_from_json(json{{"evader", "human"}, {"real_time_scale", 0}}), ProtocolError);
  EXPECT_THROW(session_config_from_json(json{{"evader", "human"}, {"t_max", -1}}), ProtocolError);
}

TEST(Protocol, ParsesClientMessages) {
  const auto cmd = std::get<msg::Command>(parse_client_message(R"({"type":"command","v":0.3,"omega":-1})"));
  EXPECT_EQ(cmd.cmd, (ControlCommand{0.3, -1.0}));
  const auto goal = std::get<msg::Goal>(parse_client_message(R"({"type":"goal","x":1.5,"y":2})"));
  EXPECT_EQ(goal.goal.x, 1.5);
  const auto join = std::get<msg::Join>(parse_client_message(R"({"type":"join","session_id":"ab","role":"spectator"})"));
  EXPECT_EQ(join.role, Viewer::kSpectator);
  EXPECT_TRUE(std::holds_alternative<msg::Pause>(parse_client_message(R"({"type":"pause"})")));
  for (const char* bad : {"not json", "[]", R"({"type":"dance"})", R"({"type":"command","v":"fast","omega":0})",
                          R"({"type":"join","session_id":"x","role":"referee"})"}) {
    try {
      parse_client_message(bad);
      ADD_FAILURE() << bad;
    } catch (const ProtocolError& e) {
      EXPECT_EQ(e.code(), "bad_request") << bad;
    }
  }
}

TEST(Protocol, MapRaster) {
  const GridMap map = load_map("resolution 1.0\n..#\n...\n");
  const json j = map_to_json(map);
  EXPECT_EQ(j["width"], 3);
  EXPECT_EQ(j["height"], 2);
  EXPECT_EQ(j["rows"][0], "..#");
}

TEST(Session, StartsInLobbyAtTickZero) {
  Session s("a", evader_session());
  EXPECT_EQ(s.status(), SessionStatus::kLobby);
  EXPECT_FALSE(s.advance());
  const json f = s.state_frame(Viewer::kEvader);
  EXPECT_EQ(f["tick"], 0);
  EXPECT_EQ(f["status"], "lobby");
  EXPECT_TRUE(f["detected"].get<bool>());
}

TEST(Session, SpawnFailureIsReported) {
  SessionConfig cfg = evader_session();
  cfg.game.sensor.fov = 1e-4;
  cfg.game.sensor.dist_min = 3.99;
  try {
    Session s("a", cfg);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), "spawn_failed");
  }
}

TEST(Session, CommandsAreClamped) {
  Session s("a", evader_session());
  s.start();
  const CommandAck over = s.submit_command({5.0, -9.0});
  EXPECT_TRUE(over.clamped);
  EXPECT_EQ(over.applied.v, 0.4);
  EXPECT_EQ(over.applied.omega, -kPi / 2.0);
  const CommandAck ok = s.submit_command({0.1, 0.2});
  EXPECT_FALSE(ok.clamped);
  try {
    s.submit_command({std::nan(""), 0.0});
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), "bad_request");
  }
}

TEST(Session, HoldsWithoutInput) {
  Session s("a", evader_session());
  s.start();
  const Pose e0 = s.game().evader();
  for (int k = 0; k < 5; ++k) ASSERT_TRUE(s.advance());
  EXPECT_EQ(s.game().evader(), e0);
  EXPECT_EQ(s.game().tick(), 5);
}

TEST(Session, GoalRouteIsThePlannerPath) {
  Session s("a", evader_session(4, "brick_room"));
  s.start();
  const Point2 goal{6.05, 6.05};
  const Path route = s.submit_goal(goal);
  const auto expected = plan_snapped(s.game().nav(), s.game().evader().position(), goal);
  ASSERT_TRUE(expected.has_value());
  EXPECT_EQ(route.cells, expected->cells);
  for (int k = 0; k < 60; ++k) s.advance();
  EXPECT_LT(distance(s.game().evader().position(), s.game().map().cell_to_world(route.cells.back())), 0.3);
  try {
    s.submit_goal({0.05, 0.05});
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), "invalid_goal");
  }
}

TEST(Session, OverlayIsTheVisibilityRegion) {
  Session s("a", evader_session(6));
  s.start();
  for (int k = 0; k < 5; ++k) {
    s.advance();
    const json f = s.state_frame(Viewer::kEvader);
    const auto region = compute_visibility(s.game().map(), s.game().pursuer(), s.game().config().sensor);
    ASSERT_EQ(f["overlay_cells"].size(), region.cells().size());
    for (std::size_t i = 0; i < region.cells().size(); ++i) {
      ASSERT_EQ(f["overlay_cells"][i][0], region.cells()[i].row);
      ASSERT_EQ(f["overlay_cells"][i][1], region.cells()[i].col);
    }
    EXPECT_EQ(f["poses"]["pursuer"], pose_to_json(s.game().pursuer()));
  }
}

TEST(Session, MatchesEngineUnderScriptedInput) {
  std::vector<ControlCommand> script;
  for (int k = 0; k < 90; ++k) script.push_back({0.3, k % 7 == 0 ? 1.0 : -0.2});
  const SessionConfig cfg = evader_session(21, "complex_hall");
  Session s("a", cfg);
  s.start();
  for (const auto& cmd : script) {
    s.submit_command(cmd);
    s.advance();
  }
  EXPECT_EQ(s.status(), SessionStatus::kFinished);
  PolicyOverrides o;
  o.evader = [script](const GameConfig&) { return std::make_unique<ScriptedPolicy>(script); };
  const EpisodeResult expected = run_episode(cfg.game, o);
  EXPECT_EQ(s.result(), expected);
  const json fin = s.finished_frame();
  EXPECT_EQ(fin["episode_summary"]["success_rate"].get<double>(), expected.success_rate);
  EXPECT_TRUE(fin["episode_summary"]["completed"].get<bool>());
  EXPECT_THROW(s.submit_command({0.1, 0.0}), ProtocolError);
}

TEST(Session, HumanPursuerNeverSeesHiddenEvader) {
  const SessionConfig cfg = session_config_from_json(json{{"map", "brick_room"}, {"pursuer", "human"}, {"evader", "smart"}, {"seed", 8}});
  Session s("a", cfg);
  s.start();
  int hidden = 0;
  while (s.status() != SessionStatus::kFinished) {
    s.advance();
    const json f = s.state_frame(Viewer::kPursuer);
    const bool detected = f["detected"];
    EXPECT_EQ(f["poses"].contains("evader"), detected);
    EXPECT_EQ(f.contains("observation"), detected);
    EXPECT_FALSE(f.contains("particles"));
    if (!detected) {
      ++hidden;
      EXPECT_TRUE(f.contains("estimate"));
    }
    EXPECT_TRUE(s.state_frame(Viewer::kEvader)["poses"].contains("evader"));
  }
  EXPECT_GT(hidden, 0);
  EXPECT_TRUE(s.state_frame(Viewer::kSpectator).contains("particles"));
}

TEST(Session, PauseStopsTheClock) {
  Session s("a", evader_session());
  s.start();
  s.advance();
  s.pause();
  EXPECT_FALSE(s.advance());
  s.resume();
  EXPECT_TRUE(s.advance());
  EXPECT_EQ(s.game().tick(), 2);
  s.finish();
  EXPECT_EQ(s.status(), SessionStatus::kFinished);
  EXPECT_FALSE(s.finished_frame()["episode_summary"]["completed"].get<bool>());
}

TEST(Session, WritesTickLog) {
  const auto path = std::filesystem::temp_directory_path() / "pursuit_session_log.jsonl";
  std::filesystem::remove(path);
  {
    Session s("a", evader_session());
    s.set_log(path);
    s.start();
    for (int k = 0; k < 3; ++k) s.advance();
    s.finish();
  }
  std::ifstream in(path);
  std::vector<json> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(json::parse(line));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines.front()["session_id"], "a");
  for (int k = 1; k <= 3; ++k) EXPECT_EQ(lines[k]["tick"], k);
  EXPECT_EQ(lines.back()["type"], "finished");
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------------------------

struct ServerFixture : ::testing::Test {
  asio::io_context io;
  std::unique_ptr<Server> server;
  std::thread runner;
  std::filesystem::path static_dir = std::filesystem::temp_directory_path() / "pursuit_static_test";

  void SetUp() override {
    std::filesystem::create_directories(static_dir);
    std::ofstream(static_dir / "index.html") << "<html>pursuit</html>";
    std::ofstream(static_dir / "app.js") << "console.log(1);";
    ServerOptions opts;
    opts.port = 0;
    opts.static_dir = static_dir;
    opts.disconnect_grace = std::chrono::milliseconds(200);
    server = std::make_unique<Server>(io, opts);
    server->start();
    runner = std::thread([this] { io.run(); });
  }

  void TearDown() override {
    asio::post(io, [this] { server->stop(); });
    io.stop();
    runner.join();
    server.reset();
    std::filesystem::remove_all(static_dir);
  }

  http::response<http::string_body> get(const std::string& target) {
    asio::io_context cio;
    tcp::socket sock(cio);
    sock.connect({asio::ip::make_address("127.0.0.1"), server->port()});
    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "localhost");
    http::write(sock, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(sock, buf, res);
    return res;
  }
};

struct Client {
  asio::io_context io;
  websocket::stream<tcp::socket> ws{io};

  explicit Client(std::uint16_t port) {
    ws.next_layer().connect({asio::ip::make_address("127.0.0.1"), port});
    ws.handshake("localhost", "/ws");
  }
  void send(const json& j) { ws.write(asio::buffer(j.dump())); }
  json recv() {
    beast::flat_buffer buf;
    ws.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  json recv_type(const std::string& type, int limit = 500) {
    for (int i = 0; i < limit; ++i) {
      json j = recv();
      if (j["type"] == type) return j;
    }
    throw std::runtime_error("no '" + type + "' message");
  }
};

TEST_F(ServerFixture, HealthReportsVersionAndSessions) {
  auto res = get("/health");
  EXPECT_EQ(res.result(), http::status::ok);
  const json j = json::parse(res.body());
  EXPECT_EQ(j["version"], kVersion);
  EXPECT_EQ(j["active_sessions"], 0);

  Client c(server->port());
  c.send({{"type", "create"}, {"config", {{"evader", "human"}, {"map", "enclosed_room"}}}});
  c.recv_type("created");
  EXPECT_EQ(json::parse(get("/health").body())["active_sessions"], 1);
}

TEST_F(ServerFixture, ServesStaticFiles) {
  auto index = get("/");
  EXPECT_EQ(index.result(), http::status::ok);
  EXPECT_EQ(index.body(), "<html>pursuit</html>");
  EXPECT_EQ(index[http::field::content_type], "text/html");
  auto js = get("/app.js");
  EXPECT_EQ(js.body(), "console.log(1);");
  EXPECT_EQ(js[http::field::content_type], "application/javascript");
  EXPECT_EQ(get("/missing.css").result(), http::status::not_found);
  EXPECT_NE(get("/../etc/passwd").result(), http::status::ok);
}

TEST_F(ServerFixture, FullGameOverWebSocket) {
  Client human(server->port());
  human.send({{"type", "create"},
              {"config", {{"evader", "human"}, {"pursuer", "smart"}, {"map", "enclosed_room"}, {"seed", 5},
                          {"t_max", 20}, {"real_time_scale", 100}}}});
  const json created = human.recv_type("created");
  const std::string id = created["session_id"];
  EXPECT_EQ(created["status"], "lobby");

  Client watcher(server->port());
  watcher.send({{"type", "join"}, {"session_id", id}, {"role", "spectator"}});
  EXPECT_EQ(watcher.recv_type("joined")["role"], "spectator");

  human.send({{"type", "join"}, {"session_id", id}, {"role", "evader"}});
  const json joined = human.recv_type("joined");
  EXPECT_EQ(joined["human"], "evader");
  EXPECT_EQ(joined["map"]["width"], 80);
  EXPECT_EQ(human.recv_type("state")["tick"], 0);

  human.send({{"type", "command"}, {"v", 9.0}, {"omega", 0.0}});
  const json ack = human.recv_type("ack");
  EXPECT_EQ(ack["for"], "command");
  EXPECT_TRUE(ack["clamped"].get<bool>());
  EXPECT_EQ(ack["v"], 0.4);

  const json fin = human.recv_type("finished");
  EXPECT_EQ(fin["session_id"], id);
  EXPECT_EQ(fin["episode_summary"]["ticks"], 20);
  EXPECT_TRUE(fin["episode_summary"]["completed"].get<bool>());

  const json seen = watcher.recv_type("finished");
  EXPECT_EQ(seen["episode_summary"], fin["episode_summary"]);
}

TEST_F(ServerFixture, TicksReachSpectators) {
  Client human(server->port());
  human.send({{"type", "create"}, {"config", {{"evader", "human"}, {"map", "brick_room"}, {"real_time_scale", 50}}}});
  const std::string id = human.recv_type("created")["session_id"];
  human.send({{"type", "join"}, {"session_id", id}, {"role", "evader"}});
  Client watcher(server->port());
  watcher.send({{"type", "join"}, {"session_id", id}, {"role", "spectator"}});
  int last = -1;
  for (int i = 0; i < 4; ++i) {
    const json f = watcher.recv_type("state");
    EXPECT_GT(f["tick"].get<int>(), last - (i == 0 ? 1 : 0));
    last = f["tick"];
    EXPECT_TRUE(f.contains("particles"));
    EXPECT_TRUE(f["poses"].contains("evader"));
  }
}

TEST_F(ServerFixture, ProtocolErrors) {
  Client c(server->port());
  c.send({{"type", "command"}, {"v", 0.1}, {"omega", 0}});
  EXPECT_EQ(c.recv_type("error")["code"], "not_joined");
  c.send({{"type", "join"}, {"session_id", "nope"}, {"role", "evader"}});
  EXPECT_EQ(c.recv_type("error")["code"], "not_found");
  c.ws.write(asio::buffer(std::string("{oops")));
  EXPECT_EQ(c.recv_type("error")["code"], "bad_request");
  c.send({{"type", "create"}, {"config", {{"evader", "human"}, {"pursuer", "human"}}}});
  EXPECT_EQ(c.recv_type("error")["code"], "invalid_config");

  c.send({{"type", "create"}, {"config", {{"evader", "human"}, {"map", "enclosed_room"}}}});
  const std::string id = c.recv_type("created")["session_id"];
  c.send({{"type", "join"}, {"session_id", id}, {"role", "pursuer"}});
  EXPECT_EQ(c.recv_type("error")["code"], "role_unavailable");

  Client spectator(server->port());
  spectator.send({{"type", "join"}, {"session_id", id}, {"role", "spectator"}});
  spectator.recv_type("joined");
  spectator.send({{"type", "command"}, {"v", 0.1}, {"omega", 0}});
  EXPECT_EQ(spectator.recv_type("error")["code"], "forbidden");

  c.send({{"type", "join"}, {"session_id", id}, {"role", "evader"}});
  c.recv_type("joined");
  Client intruder(server->port());
  intruder.send({{"type", "join"}, {"session_id", id}, {"role", "evader"}});
  EXPECT_EQ(intruder.recv_type("error")["code"], "role_taken");
}

TEST_F(ServerFixture, DisconnectPausesThenFinishes) {
  std::string id;
  {
    Client human(server->port());
    human.send({{"type", "create"}, {"config", {{"evader", "human"}, {"map", "enclosed_room"}}}});
    id = human.recv_type("created")["session_id"];
    human.send({{"type", "join"}, {"session_id", id}, {"role", "evader"}});
    human.recv_type("joined");
    human.ws.close(websocket::close_code::normal);
  }
  Client watcher(server->port());
  watcher.send({{"type", "join"}, {"session_id", id}, {"role", "spectator"}});
  // Either still paused inside the grace window or already finished.
  json first = watcher.recv();
  while (first["type"] == "joined") first = watcher.recv();
  if (first["type"] == "state") {
    EXPECT_TRUE(first["paused"].get<bool>());
    first = watcher.recv_type("finished");
  }
  EXPECT_EQ(first["type"], "finished");
  EXPECT_FALSE(first["episode_summary"]["completed"].get<bool>());
  EXPECT_EQ(server->active_sessions(), 0u);
}

TEST_F(ServerFixture, DistinctSessionIds) {
  Client c(server->port());
  std::set<std::string> ids;
  for (int i = 0; i < 5; ++i) {
    c.send({{"type", "create"}, {"config", {{"evader", "human"}, {"map", "enclosed_room"}, {"seed", i}}}});
    ids.insert(c.recv_type("created")["session_id"].get<std::string>());
  }
  EXPECT_EQ(ids.size(), 5u);
}

}  // namespace
}  // namespace pursuit::live
