#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace prefnet::sim {

using NodeId = int;

enum class NodeStatus { kUp, kDown };

struct Node {
  NodeId id = 0;
  double cpu_capacity = 1.0;
  NodeStatus status = NodeStatus::kUp;
};

struct Edge {
  NodeId i = 0;
  NodeId j = 0;
  double delay_ms = 1.0;
};

// Undirected, delay-weighted server graph. Node ids are 0..n-1.
class Topology {
 public:
  Topology() = default;
  Topology(std::string name, std::vector<Node> nodes, std::vector<Edge> edges);

  static Topology from_json(const nlohmann::json& j, std::string name = {});
  static Topology load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::string& name() const { return name_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId id) const;

  bool contains(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size(); }
  bool is_up(NodeId id) const { return node(id).status == NodeStatus::kUp; }
  void set_status(NodeId id, NodeStatus status);
  std::vector<NodeId> up_nodes() const;

  // e(n_i, n_j); empty when the pair is not adjacent. Symmetric.
  std::optional<double> delay(NodeId a, NodeId b) const;
  const std::vector<std::pair<NodeId, double>>& neighbors(NodeId id) const { return adjacency_[id]; }

  // Connectivity over the up nodes only.
  bool connected() const;

  // Bumped on every status change; lets caches detect staleness.
  std::size_t status_version() const { return status_version_; }

 private:
  std::string name_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<NodeId, double>>> adjacency_;
  std::size_t status_version_ = 0;
};

}  // namespace prefnet::sim
