#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prefnet/rl/agent.hpp"
#include "prefnet/rl/environment.hpp"

namespace prefnet::eval {

enum class EventKind { kSetAlpha, kSetBeta, kNodeDown, kNodeUp };

struct ScenarioEvent {
  std::int64_t t = 0;
  EventKind kind = EventKind::kSetAlpha;
  double value = 0.0;   // set_alpha / set_beta
  sim::NodeId node = 0; // node_down / node_up
};

struct Scenario {
  std::vector<ScenarioEvent> events;  // nondecreasing t
};

const char* event_kind_name(EventKind kind);
EventKind parse_event_kind(std::string_view text);

// Throws ConfigError on decreasing timestamps or unknown nodes.
void validate(const Scenario& scenario, const sim::Topology& topology);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);

// Greedy closed-loop rollout of an agent over a record slice, continuing the
// deployment across steps. Shared by evaluation, scenarios and live sessions.
class Stepper {
 public:
  // `wrap`: restart from the first record (keeping the deployment) when the
  // slice is exhausted instead of finishing.
  Stepper(const rl::Agent& agent, sim::Topology topology, std::span<const datagen::DatasetRecord> records,
          rl::EnvConfig config, rl::Preference preference, bool wrap = false);

  bool finished() const;
  std::int64_t tick() const { return tick_; }
  const rl::Preference& preference() const { return preference_; }
  const rl::ScalingEnv& env() const { return env_; }

  void set_alpha(double alpha);
  void set_beta(double beta);
  void set_node_status(sim::NodeId node, sim::NodeStatus status);
  void apply(const ScenarioEvent& event);

  rl::StepOutcome step();

 private:
  const rl::Agent* agent_;
  rl::ScalingEnv env_;
  rl::Preference preference_;
  bool wrap_;
  std::int64_t tick_ = 0;
};

}  // namespace prefnet::eval
