#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "prefnet/sim/deployment.hpp"
#include "prefnet/sim/request.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::sim {

// Which path position processes which chain element.
struct ServingHop {
  VnfType type = VnfType::kNat;
  NodeId node = 0;
  std::size_t path_index = 0;
  bool operator==(const ServingHop&) const = default;
};

struct SfcPath {
  std::vector<NodeId> nodes;
  std::vector<ServingHop> serving;
  bool operator==(const SfcPath&) const = default;
};

// ζ(p) = Σ e(n_{i-1}, n_i). Throws StructuralError on a missing edge.
double path_delay(const Topology& topology, std::span<const NodeId> nodes);
inline double path_delay(const Topology& topology, const SfcPath& path) { return path_delay(topology, path.nodes); }

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// All-pairs shortest delays over up nodes (Dijkstra from every source).
// Ties between equal-delay predecessors resolve to the lowest node id.
class ShortestPaths {
 public:
  ShortestPaths() = default;
  explicit ShortestPaths(const Topology& topology);

  double distance(NodeId from, NodeId to) const { return dist_[index(from, to)]; }
  // Node sequence from -> to inclusive; empty when unreachable.
  std::vector<NodeId> path(NodeId from, NodeId to) const;

 private:
  std::size_t index(NodeId a, NodeId b) const { return static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b); }

  std::size_t n_ = 0;
  std::vector<double> dist_;
  std::vector<NodeId> pred_;  // pred_[src*n + v]
};

// Greedy chain router: for each chain element in order, walk the shortest path
// to the nearest up node hosting >= 1 instance of that type (lowest id on
// ties), then to dst. Throws NodeDown or Unroutable.
SfcPath route_chain(const Topology& topology, const ShortestPaths& paths, const Deployment& deployment, NodeId src,
                    NodeId dst, std::span<const VnfType> chain);

SfcPath route_sfc(const Topology& topology, const Deployment& deployment, const ServiceRequest& request);

// Caches the all-pairs table for the topology's current up/down status.
class Router {
 public:
  explicit Router(const Topology& topology) : topology_(&topology) {}

  const ShortestPaths& table();
  SfcPath route(const Deployment& deployment, const ServiceRequest& request);

 private:
  const Topology* topology_;
  ShortestPaths table_;
  std::size_t version_ = static_cast<std::size_t>(-1);
};

}  // namespace prefnet::sim
