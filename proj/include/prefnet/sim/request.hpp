#pragma once

#include "prefnet/sim/catalog.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::sim {

struct ServiceRequest {
  NodeId src = 0;
  NodeId dst = 0;
  double bandwidth = 0.0;
  ServiceType service_type = ServiceType::kNatProxy;
  double sla_ms = 0.0;

  std::span<const VnfType> chain() const { return service_chain(service_type); }
  bool operator==(const ServiceRequest&) const = default;
};

// Throws ContractViolation when src == dst, bandwidth <= 0 or nodes unknown.
void validate_request(const ServiceRequest& request, const Topology& topology);

}  // namespace prefnet::sim
