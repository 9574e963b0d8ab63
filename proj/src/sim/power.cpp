#include "prefnet/sim/power.hpp"

#include <algorithm>

#include "prefnet/core/errors.hpp"

namespace prefnet::sim {

void validate_power_model(const PowerModel& model) {
  if (!(model.p_idle >= 0.0) || !(model.p_max >= model.p_idle)) {
    throw ConfigError("power model requires 0 <= p_idle <= p_max");
  }
}

double node_power(const PowerModel& model, const Topology& topology, const Deployment& deployment, NodeId node,
                  double assigned_load) {
  if (assigned_load < 0.0) throw ContractViolation("node_power: assigned_load must be >= 0");
  const Node& info = topology.node(node);
  if (!(info.cpu_capacity > 0.0)) throw ConfigError("node_power: cpu_capacity must be > 0");
  if (info.status == NodeStatus::kDown || deployment.node_total(node) == 0) return 0.0;
  const double ratio = std::min(1.0, assigned_load / info.cpu_capacity);
  return model.p_idle + (model.p_max - model.p_idle) * ratio;
}

std::vector<double> node_loads(std::size_t num_nodes, std::span<const ServiceRequest> requests,
                               std::span<const SfcPath> paths) {
  if (requests.size() != paths.size()) throw ContractViolation("node_loads: requests/paths size mismatch");
  std::vector<double> loads(num_nodes, 0.0);
  for (std::size_t q = 0; q < requests.size(); ++q) {
    for (const ServingHop& hop : paths[q].serving) loads[hop.node] += requests[q].bandwidth;
  }
  return loads;
}

PowerSummary network_power(const PowerModel& model, const Topology& topology, const Deployment& deployment,
                           std::span<const double> loads) {
  PowerSummary out;
  out.per_node_watts.resize(topology.num_nodes());
  for (NodeId n = 0; n < static_cast<NodeId>(topology.num_nodes()); ++n) {
    out.per_node_watts[n] = node_power(model, topology, deployment, n, loads[n]);
    out.total_watts += out.per_node_watts[n];
  }
  return out;
}

}  // namespace prefnet::sim
