#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>
#include <vector>

#include <boost/asio/io_context.hpp>
#include <boost/asio/signal_set.hpp>

#include "pursuit/live/server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Live pursuit-evasion session server"};
  pursuit::live::ServerOptions options;
  int threads = 2;
  long grace_seconds = 60;
  std::string static_dir;
  std::string log_dir;
  app.add_option("--address", options.address, "Listen address");
  app.add_option("--port", options.port, "Listen port (0 = any)");
  app.add_option("--static-dir", static_dir, "Directory with the browser client")->check(CLI::ExistingDirectory);
  app.add_option("--log-dir", log_dir, "Directory for per-session tick logs");
  app.add_option("--threads", threads, "I/O threads")->check(CLI::PositiveNumber);
  app.add_option("--disconnect-grace", grace_seconds, "Seconds to wait for a dropped player")
      ->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);
  options.static_dir = static_dir;
  options.log_dir = log_dir;
  options.disconnect_grace = std::chrono::seconds(grace_seconds);

  boost::asio::io_context io(threads);
  pursuit::live::Server server(io, options);
  try {
    server.start();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << "listening on " << options.address << ":" << server.port() << std::endl;

  boost::asio::signal_set signals(io, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) {
    server.stop();
    io.stop();
  });

  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back([&io] { io.run(); });
  io.run();
  for (auto& t : pool) t.join();
  return 0;
}
