#pragma once

#include <functional>
#include <ostream>
#include <string>

namespace tega_bridge {

// WebSocket bridge between a live trial and an operator console. Each
// connection gets its own trial; the server pushes the session messages of
// every tick and accepts {type:"activation", value} messages from the client.
struct Options {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  // Trial configuration JSON handed to the library (usually condition manual).
  std::string trial_config_json;
  // Tick at wall-clock dt; otherwise as fast as the client keeps up.
  bool realtime = true;
  // Stop after this many sessions; 0 serves until the process ends.
  int max_sessions = 0;
  // Called with the bound port once the listener is up.
  std::function<void(unsigned short)> on_listening;
  std::ostream* log = nullptr;
};

// Blocks while serving. Throws std::runtime_error on setup failure.
void serve(const Options& options);

}  // namespace tega_bridge
