#pragma once

#include <atomic>
#include <functional>
#include <string>

#include "tspine/session.hpp"

namespace tspine {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8765;           ///< line-delimited JSON stream; snapshot over HTTP on port + 1
  long max_ticks = -1;       ///< stop after this many ticks; -1 runs until stopped
  bool realtime = true;      ///< pace ticks at tick_hz; off runs them back to back
  SessionOptions session;
};

/// TSPINE_PORT when set and valid, otherwise 8765.
int default_port();

/// Runs the session service until `stop` is set or max_ticks is reached.
/// One loop owns the SessionCore; the HTTP snapshot handler only reads an
/// immutable JSON text the loop republishes every tick. `on_ready` runs once
/// both sockets listen. Returns the core for recording.
SessionCore serve_session(const Robot& robot, const ServerOptions& options, std::atomic<bool>& stop,
                          const std::function<void()>& on_ready = {});

}  // namespace tspine
