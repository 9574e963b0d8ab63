#include "prefnet/sim/deployment.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "prefnet/core/errors.hpp"
#include "prefnet/sim/request.hpp"

namespace prefnet::sim {

void validate_request(const ServiceRequest& request, const Topology& topology) {
  if (!topology.contains(request.src) || !topology.contains(request.dst)) {
    throw ContractViolation("request references unknown node");
  }
  if (request.src == request.dst) throw ContractViolation("request src must differ from dst");
  if (!(request.bandwidth > 0.0)) throw ContractViolation("request bandwidth must be > 0");
}

void Deployment::set_count(NodeId node, VnfType type, int value) {
  if (node < 0 || static_cast<std::size_t>(node) >= num_nodes_) {
    throw ContractViolation("deployment: node out of range");
  }
  if (value < 0) throw ContractViolation("deployment counts must be >= 0");
  counts_[index(node, type)] = value;
}

int Deployment::type_total(VnfType type) const {
  int total = 0;
  for (std::size_t n = 0; n < num_nodes_; ++n) total += counts_[n * kNumVnfTypes + static_cast<std::size_t>(type)];
  return total;
}

int Deployment::node_total(NodeId node) const {
  auto first = counts_.begin() + static_cast<std::ptrdiff_t>(node) * kNumVnfTypes;
  return std::accumulate(first, first + kNumVnfTypes, 0);
}

Deployment apply_action(const Deployment& deployment, const ActionMatrix& action, const Topology& topology) {
  if (action.num_nodes != deployment.num_nodes() || action.values.size() != deployment.num_nodes() * kNumVnfTypes ||
      deployment.num_nodes() != topology.num_nodes()) {
    throw ContractViolation("apply_action: action shape does not match deployment");
  }
  Deployment next = deployment;
  for (std::size_t n = 0; n < deployment.num_nodes(); ++n) {
    const auto node = static_cast<NodeId>(n);
    for (VnfType f : kAllVnfTypes) {
      const int a = action.at(node, f);
      if (a < -1 || a > 1) {
        throw ContractViolation("apply_action: entry out of {-1,0,1}: " + std::to_string(a));
      }
      if (!topology.is_up(node)) {
        next.set_count(node, f, 0);
        continue;
      }
      next.set_count(node, f, std::max(0, deployment.count(node, f) + a));
    }
  }
  return next;
}

int total_vnf_count(const Deployment& deployment) {
  return std::accumulate(deployment.raw().begin(), deployment.raw().end(), 0);
}

void zero_down_nodes(Deployment& deployment, const Topology& topology) {
  for (NodeId n = 0; n < static_cast<NodeId>(deployment.num_nodes()); ++n) {
    if (!topology.is_up(n)) {
      for (VnfType f : kAllVnfTypes) deployment.set_count(n, f, 0);
    }
  }
}

}  // namespace prefnet::sim
