#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "prefnet/sim/catalog.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::sim {

// Instance counts per (node, VNF type).
class Deployment {
 public:
  Deployment() = default;
  explicit Deployment(std::size_t num_nodes) : num_nodes_(num_nodes), counts_(num_nodes * kNumVnfTypes, 0) {}

  std::size_t num_nodes() const { return num_nodes_; }
  int count(NodeId node, VnfType type) const { return counts_[index(node, type)]; }
  void set_count(NodeId node, VnfType type, int value);

  // N(f) summed over nodes.
  int type_total(VnfType type) const;
  int node_total(NodeId node) const;

  const std::vector<int>& raw() const { return counts_; }

  bool operator==(const Deployment&) const = default;

 private:
  std::size_t index(NodeId node, VnfType type) const {
    return static_cast<std::size_t>(node) * kNumVnfTypes + static_cast<std::size_t>(type);
  }

  std::size_t num_nodes_ = 0;
  std::vector<int> counts_;
};

// A ∈ {-1,0,1}^{|N|x|F|}: scale-in / keep / scale-out per cell.
struct ActionMatrix {
  std::size_t num_nodes = 0;
  std::vector<std::int8_t> values;  // row-major (node, type)

  ActionMatrix() = default;
  explicit ActionMatrix(std::size_t nodes) : num_nodes(nodes), values(nodes * kNumVnfTypes, 0) {}

  std::int8_t at(NodeId node, VnfType type) const {
    return values[static_cast<std::size_t>(node) * kNumVnfTypes + static_cast<std::size_t>(type)];
  }
  std::int8_t& at(NodeId node, VnfType type) {
    return values[static_cast<std::size_t>(node) * kNumVnfTypes + static_cast<std::size_t>(type)];
  }
  bool operator==(const ActionMatrix&) const = default;
};

// count' = max(0, count + action); cells at down nodes stay 0.
Deployment apply_action(const Deployment& deployment, const ActionMatrix& action, const Topology& topology);

// Σ_f N(f).
int total_vnf_count(const Deployment& deployment);

// Zeroes every count at a down node.
void zero_down_nodes(Deployment& deployment, const Topology& topology);

}  // namespace prefnet::sim
