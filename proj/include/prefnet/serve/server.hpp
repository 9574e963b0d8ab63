#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "prefnet/serve/session.hpp"

namespace prefnet::serve {

// HTTP + WebSocket front end:
//   POST   /sessions        create (body: see docs/protocol.md) -> 201 state
//   GET    /sessions/{id}   state
//   DELETE /sessions/{id}   end -> 204
//   WS     /session/{id}    telemetry out, controls in (acked)
class Server {
 public:
  Server(std::string address, std::uint16_t port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Bound port (useful when constructed with port 0).
  std::uint16_t port() const;
  SessionManager& sessions();

  // Blocks until stop().
  void run();
  // Runs on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prefnet::serve
