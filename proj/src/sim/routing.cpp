#include "prefnet/sim/routing.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "prefnet/core/errors.hpp"

namespace prefnet::sim {

double path_delay(const Topology& topology, std::span<const NodeId> nodes) {
  double total = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    auto d = topology.delay(nodes[i - 1], nodes[i]);
    if (!d) {
      throw StructuralError("path_delay: no edge between " + std::to_string(nodes[i - 1]) + " and " +
                            std::to_string(nodes[i]));
    }
    total += *d;
  }
  return total;
}

ShortestPaths::ShortestPaths(const Topology& topology)
    : n_(topology.num_nodes()), dist_(n_ * n_, kUnreachable), pred_(n_ * n_, -1) {
  using Item = std::pair<double, NodeId>;
  for (NodeId s = 0; s < static_cast<NodeId>(n_); ++s) {
    if (!topology.is_up(s)) continue;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist_[index(s, s)] = 0.0;
    queue.emplace(0.0, s);
    while (!queue.empty()) {
      auto [d, v] = queue.top();
      queue.pop();
      if (d > dist_[index(s, v)]) continue;
      for (const auto& [w, delay] : topology.neighbors(v)) {
        if (!topology.is_up(w)) continue;
        const double cand = d + delay;
        double& best = dist_[index(s, w)];
        NodeId& pred = pred_[index(s, w)];
        if (cand < best) {
          best = cand;
          pred = v;
          queue.emplace(cand, w);
        } else if (cand == best && v < pred) {
          pred = v;
        }
      }
    }
  }
}

std::vector<NodeId> ShortestPaths::path(NodeId from, NodeId to) const {
  if (dist_[index(from, to)] == kUnreachable) return {};
  std::vector<NodeId> out{to};
  for (NodeId v = to; v != from;) {
    v = pred_[index(from, v)];
    out.push_back(v);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

namespace {

void append_segment(SfcPath& path, const std::vector<NodeId>& segment) {
  // segment starts at the current tail; skip it.
  path.nodes.insert(path.nodes.end(), segment.begin() + 1, segment.end());
}

}  // namespace

SfcPath route_chain(const Topology& topology, const ShortestPaths& paths, const Deployment& deployment, NodeId src,
                    NodeId dst, std::span<const VnfType> chain) {
  if (!topology.contains(src) || !topology.contains(dst)) throw StructuralError("route: unknown endpoint");
  if (!topology.is_up(src)) throw NodeDown("route: source node " + std::to_string(src) + " is down");
  if (!topology.is_up(dst)) throw NodeDown("route: destination node " + std::to_string(dst) + " is down");

  SfcPath out;
  out.nodes.push_back(src);
  NodeId cur = src;
  for (VnfType type : chain) {
    NodeId best = -1;
    double best_dist = kUnreachable;
    for (NodeId v = 0; v < static_cast<NodeId>(topology.num_nodes()); ++v) {
      if (!topology.is_up(v) || deployment.count(v, type) < 1) continue;
      const double d = paths.distance(cur, v);
      if (d < best_dist) {
        best_dist = d;
        best = v;
      }
    }
    if (best < 0) {
      throw Unroutable(std::string("route: no reachable instance of ") + std::string(vnf_name(type)));
    }
    append_segment(out, paths.path(cur, best));
    out.serving.push_back({type, best, out.nodes.size() - 1});
    cur = best;
  }
  auto tail = paths.path(cur, dst);
  if (tail.empty()) throw Unroutable("route: destination unreachable");
  append_segment(out, tail);
  return out;
}

SfcPath route_sfc(const Topology& topology, const Deployment& deployment, const ServiceRequest& request) {
  ShortestPaths table(topology);
  return route_chain(topology, table, deployment, request.src, request.dst, request.chain());
}

const ShortestPaths& Router::table() {
  if (version_ != topology_->status_version()) {
    table_ = ShortestPaths(*topology_);
    version_ = topology_->status_version();
  }
  return table_;
}

SfcPath Router::route(const Deployment& deployment, const ServiceRequest& request) {
  return route_chain(*topology_, table(), deployment, request.src, request.dst, request.chain());
}

}  // namespace prefnet::sim
