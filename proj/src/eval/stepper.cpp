#include "prefnet/eval/stepper.hpp"

#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "prefnet/core/errors.hpp"

namespace prefnet::eval {

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::kSetAlpha: return "set_alpha";
    case EventKind::kSetBeta: return "set_beta";
    case EventKind::kNodeDown: return "node_down";
    case EventKind::kNodeUp: return "node_up";
  }
  return "?";
}

EventKind parse_event_kind(std::string_view text) {
  if (text == "set_alpha") return EventKind::kSetAlpha;
  if (text == "set_beta") return EventKind::kSetBeta;
  if (text == "node_down") return EventKind::kNodeDown;
  if (text == "node_up") return EventKind::kNodeUp;
  throw ConfigError("unknown scenario event kind '" + std::string(text) + "'");
}

void validate(const Scenario& scenario, const sim::Topology& topology) {
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const auto& e : scenario.events) {
    if (e.t < last) throw ConfigError("scenario: event timestamps must be nondecreasing");
    last = e.t;
    const bool node_event = e.kind == EventKind::kNodeDown || e.kind == EventKind::kNodeUp;
    if (node_event && !topology.contains(e.node)) {
      throw ConfigError("scenario: event references missing node " + std::to_string(e.node));
    }
    if (!node_event && !(e.value >= 0.0)) throw ConfigError("scenario: preference values must be >= 0");
  }
}

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  try {
    for (const auto& e : j.at("events")) {
      ScenarioEvent ev;
      ev.t = e.at("t").get<std::int64_t>();
      ev.kind = parse_event_kind(e.at("kind").get<std::string>());
      if (ev.kind == EventKind::kNodeDown || ev.kind == EventKind::kNodeUp) {
        ev.node = e.at("node").get<int>();
      } else {
        ev.value = e.at("value").get<double>();
      }
      s.events.push_back(ev);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("scenario json: ") + ex.what());
  }
  return s;
}

nlohmann::json to_json(const Scenario& scenario) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : scenario.events) {
    nlohmann::json j{{"t", e.t}, {"kind", event_kind_name(e.kind)}};
    if (e.kind == EventKind::kNodeDown || e.kind == EventKind::kNodeUp) {
      j["node"] = e.node;
    } else {
      j["value"] = e.value;
    }
    events.push_back(std::move(j));
  }
  return {{"events", std::move(events)}};
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  try {
    return scenario_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

namespace {

rl::EnvConfig open_ended(rl::EnvConfig config) {
  config.episode_length = std::numeric_limits<std::size_t>::max();
  return config;
}

}  // namespace

Stepper::Stepper(const rl::Agent& agent, sim::Topology topology, std::span<const datagen::DatasetRecord> records,
                 rl::EnvConfig config, rl::Preference preference, bool wrap)
    : agent_(&agent),
      env_(std::move(topology), records, open_ended(config)),
      preference_(preference),
      wrap_(wrap) {
  if (agent.meta().task != config.task) {
    throw ContractViolation("stepper: agent task does not match environment task (preference dimension mismatch)");
  }
  if (config.task == rl::Task::kPowerManagement && !preference_.beta) {
    throw ContractViolation("stepper: power management needs a beta preference");
  }
}

bool Stepper::finished() const { return !wrap_ && env_.done(); }

void Stepper::set_alpha(double alpha) {
  if (!(alpha >= 0.0)) throw ContractViolation("alpha must be >= 0");
  preference_.alpha = alpha;
}

void Stepper::set_beta(double beta) {
  if (env_.config().task != rl::Task::kPowerManagement) throw ContractViolation("beta applies to the power-management task only");
  if (!(beta >= 0.0)) throw ContractViolation("beta must be >= 0");
  preference_.beta = beta;
}

void Stepper::set_node_status(sim::NodeId node, sim::NodeStatus status) {
  if (!env_.topology().contains(node)) throw ContractViolation("unknown node " + std::to_string(node));
  env_.set_node_status(node, status);
}

void Stepper::apply(const ScenarioEvent& event) {
  switch (event.kind) {
    case EventKind::kSetAlpha: set_alpha(event.value); break;
    case EventKind::kSetBeta: set_beta(event.value); break;
    case EventKind::kNodeDown: set_node_status(event.node, sim::NodeStatus::kDown); break;
    case EventKind::kNodeUp: set_node_status(event.node, sim::NodeStatus::kUp); break;
  }
}

rl::StepOutcome Stepper::step() {
  if (env_.done()) {
    if (!wrap_) throw ContractViolation("stepper: record slice exhausted");
    env_.reset(0, env_.deployment());
  }
  sim::ActionMatrix action(env_.topology().num_nodes());
  if (auto state = env_.observe(agent_->preference_inputs(preference_))) action = agent_->act_greedy(*state).action;
  ++tick_;
  return env_.step(action, preference_);
}

}  // namespace prefnet::eval
