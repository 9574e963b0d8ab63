#include "prefnet/rl/environment.hpp"

#include <string>

#include "prefnet/core/errors.hpp"
#include "prefnet/rl/reward.hpp"

namespace prefnet::rl {

const char* task_name(Task task) { return task == Task::kPowerManagement ? "pm" : "as"; }

Task parse_task(std::string_view text) {
  if (text == "as" || text == "AS") return Task::kAutoScaling;
  if (text == "pm" || text == "PM") return Task::kPowerManagement;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected as|pm)");
}

ScalingEnv::ScalingEnv(sim::Topology topology, std::span<const datagen::DatasetRecord> records, EnvConfig config)
    : topology_(std::move(topology)), records_(records), config_(config), router_(topology_) {
  if (records_.empty()) throw ContractViolation("environment: dataset is empty");
  if (!(config_.sla_ms > 0.0)) throw ConfigError("environment: sla_ms must be > 0");
  if (config_.episode_length < 1) throw ConfigError("environment: episode_length must be >= 1");
  sim::validate_power_model(config_.power);
  for (const auto& r : records_) {
    if (r.deployment.num_nodes() != topology_.num_nodes()) {
      throw ContractViolation("environment: record deployment does not match topology size");
    }
  }
  adjacency_ = std::make_shared<const Matrix>(encoding::adjacency(topology_));
  reset(0);
}

ScalingEnv::ScalingEnv(const ScalingEnv& other)
    : topology_(other.topology_),
      records_(other.records_),
      config_(other.config_),
      router_(topology_),
      adjacency_(other.adjacency_),
      deployment_(other.deployment_),
      cursor_(other.cursor_),
      steps_(other.steps_) {}

void ScalingEnv::reset(std::size_t index) {
  if (index >= records_.size()) throw ContractViolation("environment: reset index out of range");
  reset(index, records_[index].deployment);
}

void ScalingEnv::reset(std::size_t index, const sim::Deployment& deployment) {
  if (index >= records_.size()) throw ContractViolation("environment: reset index out of range");
  cursor_ = index;
  steps_ = 0;
  deployment_ = deployment;
  sim::zero_down_nodes(deployment_, topology_);
}

bool ScalingEnv::done() const { return steps_ >= config_.episode_length || cursor_ >= records_.size(); }

std::vector<sim::ServiceRequest> ScalingEnv::active_requests() const {
  std::vector<sim::ServiceRequest> out;
  if (cursor_ >= records_.size()) return out;
  for (const auto& q : records_[cursor_].requests) {
    if (topology_.is_up(q.src) && topology_.is_up(q.dst)) out.push_back(q);
  }
  return out;
}

std::optional<encoding::SurrogateState> ScalingEnv::observe(
    std::span<const encoding::PreferenceInput> preference) const {
  auto requests = active_requests();
  if (requests.empty()) return std::nullopt;
  auto state = encoding::assemble_state(adjacency_, requests, deployment_, preference);
  if (config_.action_mask) {
    state.logit_mask = std::make_shared<const Matrix>(encoding::scale_in_mask(deployment_, topology_));
  }
  return state;
}

StepOutcome ScalingEnv::evaluate(const Preference& preference) {
  if (config_.task == Task::kPowerManagement && !preference.beta) {
    throw ContractViolation("environment: power management needs a beta preference");
  }
  StepOutcome out;
  const auto requests = active_requests();
  std::vector<PathDelay> delays;
  out.routed.reserve(requests.size());
  for (const auto& q : requests) {
    double delay = 0.0;
    try {
      out.routed.push_back(router_.route(deployment_, q));
      delay = sim::path_delay(topology_, out.routed.back());
    } catch (const Unroutable&) {
      out.routed.emplace_back();
      delay = config_.unroutable_penalty * config_.sla_ms;
      ++out.violations;
      out.delays.push_back(delay);
      delays.push_back({delay, config_.sla_ms});
      continue;
    }
    if (delay > config_.sla_ms) ++out.violations;
    out.delays.push_back(delay);
    delays.push_back({delay, config_.sla_ms});
  }
  out.paths = requests.size();
  out.vnf_total = sim::total_vnf_count(deployment_);

  // Unroutable requests carry no load.
  std::vector<sim::ServiceRequest> served;
  std::vector<sim::SfcPath> served_paths;
  for (std::size_t k = 0; k < requests.size(); ++k) {
    if (!out.routed[k].nodes.empty()) {
      served.push_back(requests[k]);
      served_paths.push_back(out.routed[k]);
    }
  }
  const auto loads = sim::node_loads(topology_.num_nodes(), served, served_paths);
  auto power = sim::network_power(config_.power, topology_, deployment_, loads);
  out.node_watts = std::move(power.per_node_watts);
  out.power_watts = power.total_watts;
  out.power_norm = config_.power.p_max > 0.0 ? power.total_watts / config_.power.p_max : 0.0;

  const double resource = preference.alpha * out.vnf_total;
  const double qos = delays.empty() ? 0.0 : qos_term(delays);
  out.reward = qos - resource;
  if (config_.task == Task::kPowerManagement) out.reward -= *preference.beta * out.power_norm;
  return out;
}

StepOutcome ScalingEnv::step(const sim::ActionMatrix& action, const Preference& preference) {
  if (done()) throw ContractViolation("environment: step after episode end");
  sim::Deployment next = sim::apply_action(deployment_, action, topology_);
  if (config_.keep_last_instance) {
    for (auto f : sim::kAllVnfTypes) {
      if (next.type_total(f) > 0 || deployment_.type_total(f) == 0) continue;
      for (std::size_t n = 0; n < topology_.num_nodes(); ++n) {
        const int node = static_cast<int>(n);
        if (topology_.is_up(node) && deployment_.count(node, f) > 0) {
          next.set_count(node, f, 1);
          break;
        }
      }
    }
  }
  deployment_ = std::move(next);
  StepOutcome out = evaluate(preference);
  ++cursor_;
  ++steps_;
  return out;
}

StepOutcome ScalingEnv::measure(const Preference& preference) { return evaluate(preference); }

void ScalingEnv::set_node_status(sim::NodeId node, sim::NodeStatus status) {
  topology_.set_status(node, status);
  sim::zero_down_nodes(deployment_, topology_);
  adjacency_ = std::make_shared<const Matrix>(encoding::adjacency(topology_));
}

}  // namespace prefnet::rl
