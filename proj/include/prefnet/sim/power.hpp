#pragma once

#include <span>
#include <vector>

#include "prefnet/sim/deployment.hpp"
#include "prefnet/sim/request.hpp"
#include "prefnet/sim/routing.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::sim {

// Linear CPU-load power model. A down node or a node without instances
// draws nothing.
struct PowerModel {
  double p_idle = 100.0;
  double p_max = 200.0;
};

void validate_power_model(const PowerModel& model);

double node_power(const PowerModel& model, const Topology& topology, const Deployment& deployment, NodeId node,
                  double assigned_load);

// Bandwidth attributed to the serving node of each chain element.
std::vector<double> node_loads(std::size_t num_nodes, std::span<const ServiceRequest> requests,
                               std::span<const SfcPath> paths);

struct PowerSummary {
  std::vector<double> per_node_watts;
  double total_watts = 0.0;
};

PowerSummary network_power(const PowerModel& model, const Topology& topology, const Deployment& deployment,
                           std::span<const double> loads);

}  // namespace prefnet::sim
