#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "prefnet/core/errors.hpp"
#include "prefnet/core/rng.hpp"
#include "prefnet/sim/deployment.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::test {

inline std::string data_path(const std::string& rel) { return std::string(PREFNET_DATA_DIR) + "/" + rel; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("prefnet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline sim::Topology make_topology(std::size_t n, const std::vector<sim::Edge>& edges, double cpu = 1000.0) {
  std::vector<sim::Node> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back({static_cast<sim::NodeId>(i), cpu, sim::NodeStatus::kUp});
  return sim::Topology("test", std::move(nodes), edges);
}

// Random connected graph: a spanning path plus extra random edges.
inline sim::Topology random_topology(std::size_t n, Rng& rng, double extra_prob = 0.4) {
  std::vector<sim::Edge> edges;
  std::uniform_real_distribution<double> delay(1.0, 10.0);
  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 1; i < n; ++i) edges.push_back({order[i - 1], order[i], std::round(delay(rng) * 10) / 10});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      bool present = false;
      for (const auto& e : edges)
        if ((e.i == static_cast<int>(i) && e.j == static_cast<int>(j)) ||
            (e.i == static_cast<int>(j) && e.j == static_cast<int>(i)))
          present = true;
      if (!present && uniform01(rng) < extra_prob)
        edges.push_back({static_cast<int>(i), static_cast<int>(j), std::round(delay(rng) * 10) / 10});
    }
  return make_topology(n, edges);
}

inline sim::Deployment random_deployment(std::size_t n, Rng& rng, int max_count = 3, double zero_prob = 0.5) {
  sim::Deployment d(n);
  std::uniform_int_distribution<int> count(1, max_count);
  for (std::size_t i = 0; i < n; ++i)
    for (auto f : sim::kAllVnfTypes)
      if (uniform01(rng) >= zero_prob) d.set_count(static_cast<sim::NodeId>(i), f, count(rng));
  return d;
}

// Floyd–Warshall over up nodes.
inline std::vector<std::vector<double>> floyd_warshall(const sim::Topology& topo) {
  const std::size_t n = topo.num_nodes();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i)
    if (topo.is_up(static_cast<int>(i))) d[i][i] = 0.0;
  for (const auto& e : topo.edges()) {
    if (!topo.is_up(e.i) || !topo.is_up(e.j)) continue;
    d[e.i][e.j] = std::min(d[e.i][e.j], e.delay_ms);
    d[e.j][e.i] = std::min(d[e.j][e.i], e.delay_ms);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

}  // namespace prefnet::test
