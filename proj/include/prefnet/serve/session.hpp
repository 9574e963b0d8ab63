#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "prefnet/datagen/record.hpp"
#include "prefnet/eval/stepper.hpp"
#include "prefnet/rl/agent.hpp"

namespace prefnet::serve {

inline constexpr int kProtocolVersion = 1;

enum class ControlKind { kSetPreference, kNodeDown, kNodeUp, kPause, kResume, kReset };

const char* control_kind_name(ControlKind kind);

struct ControlMessage {
  ControlKind kind = ControlKind::kPause;
  std::optional<double> alpha;
  std::optional<double> beta;
  sim::NodeId node = 0;
  nlohmann::json id;  // client correlation token, echoed in the ack
};

// Throws FormatError naming the offending field.
ControlMessage parse_control(const nlohmann::json& j);

struct SessionOptions {
  std::string checkpoint;
  rl::EnvConfig env;
  rl::Preference preference;  // initial; defaults to the agent's nominal preference
  unsigned tick_ms = 500;
};

// One live environment driven by a trained agent. Controls are queued and
// drained at the next tick boundary; telemetry is produced once per running
// tick. Thread-safe: any thread may submit or read, one thread ticks.
class Session {
 public:
  Session(std::string id, rl::Agent agent, sim::Topology topology, std::vector<datagen::DatasetRecord> records,
          SessionOptions options);
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  unsigned tick_ms() const { return options_.tick_ms; }

  // Validates and queues; the ack carries the tick after which it applies.
  nlohmann::json submit(const ControlMessage& message);
  nlohmann::json submit(const nlohmann::json& message);

  // Drains controls, then steps once if running. Returns the emitted frame
  // (telemetry, or a terminal frame after an environment fault).
  std::optional<nlohmann::json> tick();

  bool running() const;
  bool terminated() const;
  std::int64_t current_tick() const;
  nlohmann::json state() const;

 private:
  void apply(const ControlMessage& message);
  void rebuild();
  nlohmann::json ack(const ControlMessage& message, bool ok, const std::string& error) const;
  nlohmann::json telemetry(const rl::StepOutcome& outcome) const;

  std::string id_;
  rl::Agent agent_;
  sim::Topology topology_;
  std::vector<datagen::DatasetRecord> records_;
  SessionOptions options_;

  mutable std::mutex mutex_;
  std::deque<ControlMessage> pending_;
  std::unique_ptr<eval::Stepper> stepper_;
  rl::Preference preference_;
  std::vector<sim::NodeStatus> status_;
  std::int64_t tick_ = 0;
  bool running_ = false;
  bool terminated_ = false;
};

using FrameSink = std::function<void(const std::string& session, const nlohmann::json& frame)>;

// Owns sessions and (optionally) their tick loops.
class SessionManager {
 public:
  explicit SessionManager(FrameSink sink = {});
  ~SessionManager();

  // Loads the checkpoint, topology and dataset named in `request`; see
  // docs/protocol.md for the fields. Throws on any load failure.
  std::shared_ptr<Session> create(const nlohmann::json& request, bool start_loop = true);
  std::shared_ptr<Session> add(std::unique_ptr<Session> session, bool start_loop = true);
  std::shared_ptr<Session> get(const std::string& id) const;
  bool remove(const std::string& id);
  std::string next_id();
  void stop_all();

 private:
  struct Loop {
    std::shared_ptr<Session> session;
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> stop;
  };

  FrameSink sink_;
  mutable std::mutex mutex_;
  std::map<std::string, Loop> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace prefnet::serve
