#include "pursuit/live/server.hpp"

#include <atomic>
#include <deque>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "pursuit/live/session.hpp"
#include "pursuit/serialization.hpp"
#include "pursuit/version.hpp"

namespace pursuit::live {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;
using Strand = asio::strand<asio::io_context::executor_type>;

class Connection;
class LiveSession;

struct Server::State : std::enable_shared_from_this<Server::State> {
  State(asio::io_context& io_context, ServerOptions opts)
      : io(io_context), options(std::move(opts)), acceptor(asio::make_strand(io_context)),
        id_rng(std::random_device{}()) {}

  void accept();
  std::string new_id();
  void add(const std::shared_ptr<LiveSession>& session);
  std::shared_ptr<LiveSession> find(const std::string& id);
  void remove(const std::string& id);
  std::size_t active() const;
  json health() const { return {{"version", kVersion}, {"active_sessions", active()}}; }

  asio::io_context& io;
  ServerOptions options;
  tcp::acceptor acceptor;
  mutable std::mutex mutex;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions;
  std::mt19937_64 id_rng;
  std::atomic<std::uint16_t> bound_port{0};
};

// WebSocket client. All members are touched only on the socket's strand.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket&& socket, std::shared_ptr<Server::State> server)
      : ws_(std::move(socket)), server_(std::move(server)) {}

  void accept(http::request<http::string_body> req);
  /// Thread-safe: queues a text frame for this client.
  void send(std::string text);

 private:
  void do_read();
  void handle(const std::string& text);
  void do_write();
  void closed();

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::shared_ptr<Server::State> server_;
  std::shared_ptr<LiveSession> session_;
  bool open_ = false;
};

// A Session plus its timers and audience, confined to one strand.
class LiveSession : public std::enable_shared_from_this<LiveSession> {
 public:
  LiveSession(asio::io_context& io, Session session, std::weak_ptr<Server::State> server)
      : session_(std::move(session)), strand_(asio::make_strand(io)), tick_timer_(strand_),
        grace_timer_(strand_), expire_timer_(strand_), server_(std::move(server)) {}

  const std::string& id() const { return id_; }
  bool finished() const { return finished_.load(); }

  void open(std::chrono::milliseconds lobby_timeout);
  void join(std::shared_ptr<Connection> conn, Viewer viewer);
  void input(std::shared_ptr<Connection> conn, ClientMessage message);
  void leave(const Connection* conn);

 private:
  void restart_clock();
  void schedule_tick();
  void on_tick();
  void broadcast();
  void finish();
  void reply_error(const std::shared_ptr<Connection>& conn, const ProtocolError& e);

  Session session_;
  const std::string id_ = session_.id();
  Strand strand_;
  asio::steady_timer tick_timer_;
  asio::steady_timer grace_timer_;
  asio::steady_timer expire_timer_;
  std::weak_ptr<Server::State> server_;
  std::vector<std::pair<std::weak_ptr<Connection>, Viewer>> viewers_;
  std::weak_ptr<Connection> human_;
  bool human_present_ = false;
  bool paused_by_disconnect_ = false;
  std::chrono::steady_clock::time_point epoch_;
  long long ticks_since_epoch_ = 0;
  std::atomic<bool> finished_{false};
};

// Plain HTTP: health endpoint, static files, and WebSocket upgrades.
class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, std::shared_ptr<Server::State> server)
      : stream_(std::move(socket)), server_(std::move(server)) {}

  void run() {
    asio::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->do_read(); });
  }

 private:
  void do_read();
  void respond(http::request<http::string_body> req);

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  std::shared_ptr<Server::State> server_;
};

// ---------------------------------------------------------------------------------------------

void Server::State::accept() {
  acceptor.async_accept(asio::make_strand(io), [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (!self->acceptor.is_open()) return;
    if (!ec) std::make_shared<HttpConnection>(std::move(socket), self)->run();
    self->accept();
  });
}

std::string Server::State::new_id() {
  std::lock_guard lock(mutex);
  for (;;) {
    std::ostringstream out;
    out << std::hex << std::setfill('0') << std::setw(16) << id_rng();
    if (!sessions.contains(out.str())) return out.str();
  }
}

void Server::State::add(const std::shared_ptr<LiveSession>& session) {
  std::lock_guard lock(mutex);
  sessions.emplace(session->id(), session);
}

std::shared_ptr<LiveSession> Server::State::find(const std::string& id) {
  std::lock_guard lock(mutex);
  const auto it = sessions.find(id);
  return it == sessions.end() ? nullptr : it->second;
}

void Server::State::remove(const std::string& id) {
  std::lock_guard lock(mutex);
  sessions.erase(id);
}

std::size_t Server::State::active() const {
  std::lock_guard lock(mutex);
  std::size_t n = 0;
  for (const auto& [id, s] : sessions) n += s->finished() ? 0 : 1;
  return n;
}

// ---------------------------------------------------------------------------------------------

void LiveSession::open(std::chrono::milliseconds lobby_timeout) {
  asio::post(strand_, [self = shared_from_this(), lobby_timeout] {
    self->grace_timer_.expires_after(lobby_timeout);
    self->grace_timer_.async_wait([self](beast::error_code ec) {
      if (!ec && self->session_.status() == SessionStatus::kLobby) self->finish();
    });
  });
}

void LiveSession::join(std::shared_ptr<Connection> conn, Viewer viewer) {
  asio::post(strand_, [self = shared_from_this(), conn = std::move(conn), viewer] {
    Session& s = self->session_;
    if (s.status() == SessionStatus::kFinished) {
      conn->send(s.finished_frame().dump());
      return;
    }
    if (viewer != Viewer::kSpectator && viewer != s.human_viewer()) {
      self->reply_error(conn, ProtocolError("role_unavailable", "that role is played by the computer"));
      return;
    }
    if (viewer == s.human_viewer()) {
      if (self->human_present_ && !self->human_.expired()) {
        self->reply_error(conn, ProtocolError("role_taken", "the human role already has a player"));
        return;
      }
      self->human_ = conn;
      self->human_present_ = true;
      self->grace_timer_.cancel();
      if (self->paused_by_disconnect_) {
        self->paused_by_disconnect_ = false;
        s.resume();
      }
    }
    self->viewers_.emplace_back(conn, viewer);
    conn->send(json{{"type", "joined"},
                    {"session_id", self->id_},
                    {"role", to_string(viewer)},
                    {"human", to_string(s.human_role())},
                    {"dt", s.config().game.dt},
                    {"real_time_scale", s.config().real_time_scale},
                    {"map", map_to_json(s.game().map())}}
                   .dump());
    if (viewer == s.human_viewer() && s.status() == SessionStatus::kLobby) s.start();
    conn->send(s.state_frame(viewer).dump());
    if (viewer == s.human_viewer() && s.running()) self->restart_clock();
  });
}

void LiveSession::input(std::shared_ptr<Connection> conn, ClientMessage message) {
  asio::post(strand_, [self = shared_from_this(), conn = std::move(conn), message = std::move(message)] {
    if (self->human_.lock() != conn) {
      self->reply_error(conn, ProtocolError("forbidden", "only the human player can control this session"));
      return;
    }
    Session& s = self->session_;
    try {
      if (const auto* c = std::get_if<msg::Command>(&message)) {
        const auto ack = s.submit_command(c->cmd);
        conn->send(json{{"type", "ack"},
                        {"for", "command"},
                        {"v", ack.applied.v},
                        {"omega", ack.applied.omega},
                        {"clamped", ack.clamped}}
                       .dump());
      } else if (const auto* g = std::get_if<msg::Goal>(&message)) {
        const Path path = s.submit_goal(g->goal);
        json points = json::array();
        for (const Point2& p : path.waypoints) points.push_back({p.x, p.y});
        conn->send(json{{"type", "ack"}, {"for", "goal"}, {"goal", {g->goal.x, g->goal.y}}, {"path", points}}.dump());
      } else if (std::holds_alternative<msg::Pause>(message)) {
        s.pause();
        self->tick_timer_.cancel();
        conn->send(json{{"type", "ack"}, {"for", "pause"}}.dump());
        self->broadcast();
      } else if (std::holds_alternative<msg::Resume>(message)) {
        const bool was_paused = s.paused();
        s.resume();
        conn->send(json{{"type", "ack"}, {"for", "resume"}}.dump());
        if (was_paused && s.running()) self->restart_clock();
        self->broadcast();
      }
    } catch (const ProtocolError& e) {
      self->reply_error(conn, e);
    }
  });
}

void LiveSession::leave(const Connection* conn) {
  asio::post(strand_, [self = shared_from_this(), conn] {
    auto& v = self->viewers_;
    std::erase_if(v, [&](const auto& entry) {
      const auto p = entry.first.lock();
      return !p || p.get() == conn;
    });
    const auto human = self->human_.lock();
    const bool was_human = self->human_present_ && (!human || human.get() == conn);
    if (!was_human || self->session_.status() == SessionStatus::kFinished) return;
    self->human_present_ = false;
    self->human_.reset();
    if (!self->session_.paused()) {
      self->session_.pause();
      self->paused_by_disconnect_ = true;
    }
    self->tick_timer_.cancel();
    self->broadcast();
    const auto server = self->server_.lock();
    const auto grace = server ? server->options.disconnect_grace : std::chrono::milliseconds(60000);
    self->grace_timer_.expires_after(grace);
    self->grace_timer_.async_wait([self](beast::error_code ec) {
      if (!ec && !self->human_present_) self->finish();
    });
  });
}

void LiveSession::restart_clock() {
  epoch_ = std::chrono::steady_clock::now();
  ticks_since_epoch_ = 0;
  schedule_tick();
}

void LiveSession::schedule_tick() {
  const auto& cfg = session_.config();
  const std::chrono::duration<double> period(cfg.game.dt / cfg.real_time_scale);
  const auto deadline =
      epoch_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(period * (ticks_since_epoch_ + 1));
  tick_timer_.expires_at(deadline);
  tick_timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
    if (!ec) self->on_tick();
  });
}

void LiveSession::on_tick() {
  if (!session_.running()) return;
  ++ticks_since_epoch_;
  session_.advance();
  broadcast();
  if (session_.status() == SessionStatus::kFinished) {
    finish();
    return;
  }
  schedule_tick();
}

void LiveSession::broadcast() {
  std::map<Viewer, std::string> frames;
  for (const auto& [weak, viewer] : viewers_) {
    const auto conn = weak.lock();
    if (!conn) continue;
    auto it = frames.find(viewer);
    if (it == frames.end()) it = frames.emplace(viewer, session_.state_frame(viewer).dump()).first;
    conn->send(it->second);
  }
}

void LiveSession::finish() {
  if (finished_.exchange(true)) return;
  tick_timer_.cancel();
  grace_timer_.cancel();
  session_.finish();
  const std::string frame = session_.finished_frame().dump();
  for (const auto& [weak, viewer] : viewers_) {
    if (const auto conn = weak.lock()) conn->send(frame);
  }
  const auto server = server_.lock();
  const auto ttl = server ? server->options.finished_ttl : std::chrono::milliseconds(0);
  expire_timer_.expires_after(ttl);
  expire_timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    if (const auto srv = self->server_.lock()) srv->remove(self->id_);
  });
}

void LiveSession::reply_error(const std::shared_ptr<Connection>& conn, const ProtocolError& e) {
  conn->send(error_message(e.code(), e.what()).dump());
}

// ---------------------------------------------------------------------------------------------

void Connection::accept(http::request<http::string_body> req) {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
    if (ec) return;
    self->open_ = true;
    self->do_read();
  });
}

void Connection::send(std::string text) {
  asio::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
    if (!self->open_) return;
    self->outbox_.push_back(std::move(text));
    if (self->outbox_.size() == 1) self->do_write();
  });
}

void Connection::do_write() {
  ws_.text(true);
  ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      self->closed();
      return;
    }
    self->outbox_.pop_front();
    if (!self->outbox_.empty()) self->do_write();
  });
}

void Connection::do_read() {
  ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      self->closed();
      return;
    }
    const std::string text = beast::buffers_to_string(self->buffer_.data());
    self->buffer_.consume(self->buffer_.size());
    self->handle(text);
    self->do_read();
  });
}

void Connection::closed() {
  if (!open_) return;
  open_ = false;
  outbox_.clear();
  if (session_) session_->leave(this);
}

void Connection::handle(const std::string& text) {
  auto reply_error = [&](const ProtocolError& e) {
    outbox_.push_back(error_message(e.code(), e.what()).dump());
    if (outbox_.size() == 1) do_write();
  };
  try {
    ClientMessage message = parse_client_message(text);
    if (auto* create = std::get_if<msg::Create>(&message)) {
      const std::string id = server_->new_id();
      Session session(id, std::move(create->config));
      if (!server_->options.log_dir.empty()) {
        std::filesystem::create_directories(server_->options.log_dir);
        session.set_log(server_->options.log_dir / (id + ".jsonl"));
      }
      const json created = {{"type", "created"},
                            {"session_id", id},
                            {"human", to_string(session.human_role())},
                            {"status", to_string(session.status())},
                            {"config", to_json(session.config().game)}};
      auto live = std::make_shared<LiveSession>(server_->io, std::move(session), server_);
      server_->add(live);
      live->open(server_->options.disconnect_grace);
      send(created.dump());
      return;
    }
    if (auto* join = std::get_if<msg::Join>(&message)) {
      auto live = server_->find(join->session_id);
      if (!live) throw ProtocolError("not_found", "no session '" + join->session_id + "'");
      if (session_ && session_ != live) session_->leave(this);
      session_ = live;
      live->join(shared_from_this(), join->role);
      return;
    }
    if (!session_) throw ProtocolError("not_joined", "join a session first");
    session_->input(shared_from_this(), std::move(message));
  } catch (const ProtocolError& e) {
    reply_error(e);
  } catch (const std::exception& e) {
    reply_error(ProtocolError("internal", e.what()));
  }
}

// ---------------------------------------------------------------------------------------------

namespace {

std::string_view mime_type(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

}  // namespace

void HttpConnection::do_read() {
  parser_.emplace();
  parser_->body_limit(1 << 16);
  stream_.expires_after(std::chrono::seconds(30));
  http::async_read(stream_, buffer_, *parser_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
    if (ec) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (websocket::is_upgrade(self->parser_->get())) {
      self->stream_.expires_never();
      std::make_shared<Connection>(self->stream_.release_socket(), self->server_)->accept(self->parser_->release());
      return;
    }
    self->respond(self->parser_->release());
  });
}

void HttpConnection::respond(http::request<http::string_body> req) {
  auto res = std::make_shared<http::response<http::string_body>>();
  res->version(req.version());
  res->keep_alive(req.keep_alive());
  res->set(http::field::server, std::string("pursuit/") + kVersion);

  auto reply = [&](http::status status, std::string_view type, std::string body) {
    res->result(status);
    res->set(http::field::content_type, std::string(type));
    res->body() = std::move(body);
  };

  const std::string target(req.target().substr(0, req.target().find('?')));
  if (req.method() != http::verb::get) {
    reply(http::status::method_not_allowed, "text/plain", "method not allowed\n");
  } else if (target == "/health") {
    reply(http::status::ok, "application/json", server_->health().dump());
  } else {
    const auto& root = server_->options.static_dir;
    std::filesystem::path rel = target == "/" ? "index.html" : target.substr(1);
    const bool escapes = target.find("..") != std::string::npos || target.find('\\') != std::string::npos;
    std::error_code ec;
    const auto file = root / rel;
    if (root.empty() || escapes || !std::filesystem::is_regular_file(file, ec)) {
      reply(http::status::not_found, "text/plain", "not found\n");
    } else {
      std::ifstream in(file, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      reply(http::status::ok, mime_type(file), body.str());
    }
  }
  res->prepare_payload();
  http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
    if (ec) return;
    if (res->keep_alive()) {
      self->do_read();
    } else {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    }
  });
}

// ---------------------------------------------------------------------------------------------

Server::Server(asio::io_context& io, ServerOptions options)
    : state_(std::make_shared<State>(io, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  const tcp::endpoint endpoint(asio::ip::make_address(state_->options.address), state_->options.port);
  auto& acceptor = state_->acceptor;
  acceptor.open(endpoint.protocol());
  acceptor.set_option(asio::socket_base::reuse_address(true));
  acceptor.bind(endpoint);
  acceptor.listen(asio::socket_base::max_listen_connections);
  state_->bound_port = acceptor.local_endpoint().port();
  state_->accept();
}

void Server::stop() {
  asio::post(state_->acceptor.get_executor(), [state = state_] {
    beast::error_code ignored;
    state->acceptor.close(ignored);
  });
}

std::uint16_t Server::port() const { return state_->bound_port; }

std::size_t Server::active_sessions() const { return state_->active(); }

json Server::health() const { return state_->health(); }

}  // namespace pursuit::live
