#include "prefnet/sim/topology.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "prefnet/core/errors.hpp"

namespace prefnet::sim {

Topology::Topology(std::string name, std::vector<Node> nodes, std::vector<Edge> edges)
    : name_(std::move(name)), nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(nodes_.begin(), nodes_.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    if (nodes_[k].id != static_cast<NodeId>(k)) {
      throw StructuralError("topology node ids must be 0..n-1 without gaps");
    }
    if (!(nodes_[k].cpu_capacity > 0.0)) {
      throw ConfigError("node " + std::to_string(k) + ": cpu_capacity must be > 0");
    }
  }
  adjacency_.assign(nodes_.size(), {});
  for (const Edge& e : edges_) {
    if (!contains(e.i) || !contains(e.j)) throw StructuralError("edge references unknown node");
    if (e.i == e.j) throw StructuralError("self-edge at node " + std::to_string(e.i));
    if (!(e.delay_ms > 0.0)) throw StructuralError("edge delays must be strictly positive");
    if (delay(e.i, e.j)) throw StructuralError("duplicate edge");
    adjacency_[e.i].emplace_back(e.j, e.delay_ms);
    adjacency_[e.j].emplace_back(e.i, e.delay_ms);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

Topology Topology::from_json(const nlohmann::json& j, std::string name) {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  try {
    for (const auto& n : j.at("nodes")) {
      nodes.push_back({n.at("id").get<int>(), n.value("cpu_capacity", 1000.0), NodeStatus::kUp});
    }
    for (const auto& e : j.at("edges")) {
      edges.push_back({e.at("i").get<int>(), e.at("j").get<int>(), e.at("delay_ms").get<double>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("topology json: ") + ex.what());
  }
  if (name.empty()) name = j.value("name", std::string("topology"));
  return Topology(std::move(name), std::move(nodes), std::move(edges));
}

Topology Topology::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open topology file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(path.string() + ": " + ex.what());
  }
  std::string name = j.value("name", path.stem().string());
  return from_json(j, name);
}

nlohmann::json Topology::to_json() const {
  nlohmann::json j;
  j["name"] = name_;
  j["nodes"] = nlohmann::json::array();
  for (const Node& n : nodes_) j["nodes"].push_back({{"id", n.id}, {"cpu_capacity", n.cpu_capacity}});
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : edges_) j["edges"].push_back({{"i", e.i}, {"j", e.j}, {"delay_ms", e.delay_ms}});
  return j;
}

const Node& Topology::node(NodeId id) const {
  if (!contains(id)) throw StructuralError("unknown node " + std::to_string(id));
  return nodes_[id];
}

void Topology::set_status(NodeId id, NodeStatus status) {
  if (!contains(id)) throw StructuralError("unknown node " + std::to_string(id));
  if (nodes_[id].status != status) {
    nodes_[id].status = status;
    ++status_version_;
  }
}

std::vector<NodeId> Topology::up_nodes() const {
  std::vector<NodeId> out;
  for (const Node& n : nodes_)
    if (n.status == NodeStatus::kUp) out.push_back(n.id);
  return out;
}

std::optional<double> Topology::delay(NodeId a, NodeId b) const {
  if (!contains(a) || !contains(b)) return std::nullopt;
  for (const auto& [nb, d] : adjacency_[a])
    if (nb == b) return d;
  return std::nullopt;
}

bool Topology::connected() const {
  auto up = up_nodes();
  if (up.empty()) return true;
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<NodeId> stack{up.front()};
  seen[up.front()] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (const auto& [nb, d] : adjacency_[v]) {
      if (!seen[nb] && is_up(nb)) {
        seen[nb] = 1;
        ++count;
        stack.push_back(nb);
      }
    }
  }
  return count == up.size();
}

}  // namespace prefnet::sim
