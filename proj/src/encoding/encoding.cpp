#include "prefnet/encoding/encoding.hpp"

#include <cmath>

#include "prefnet/core/errors.hpp"

namespace prefnet::encoding {

Matrix adjacency(const sim::Topology& topology) {
  const std::size_t n = topology.num_nodes();
  Matrix m(n, n);
  for (const sim::Edge& e : topology.edges()) {
    if (!(e.delay_ms > 0.0)) throw StructuralError("adjacency: edge delay must be > 0");
    if (!topology.is_up(e.i) || !topology.is_up(e.j)) continue;
    m(e.i, e.j) = 1.0 / e.delay_ms;
    m(e.j, e.i) = 1.0 / e.delay_ms;
  }
  return m;
}

Matrix annotate(const sim::Deployment& deployment, const sim::ServiceRequest& request) {
  const std::size_t n = deployment.num_nodes();
  if (request.src < 0 || request.dst < 0 || static_cast<std::size_t>(request.src) >= n ||
      static_cast<std::size_t>(request.dst) >= n) {
    throw ContractViolation("annotate: request node outside topology");
  }
  Matrix x(n, kAnnotationCols);
  for (std::size_t v = 0; v < n; ++v) {
    for (sim::VnfType f : sim::kAllVnfTypes) {
      x(v, static_cast<std::size_t>(f)) = deployment.count(static_cast<sim::NodeId>(v), f);
    }
  }
  x(request.src, sim::kNumVnfTypes) = 1.0;
  x(request.dst, sim::kNumVnfTypes + 1) = 1.0;
  return x;
}

SurrogateState assemble_state(std::shared_ptr<const Matrix> adjacency, std::span<const sim::ServiceRequest> requests,
                              const sim::Deployment& deployment, std::span<const PreferenceInput> preference) {
  if (requests.empty()) throw ContractViolation("assemble_state: at least one request is required");
  if (preference.empty() || preference.size() > 2) {
    throw ContractViolation("assemble_state: preference must have 1 or 2 dimensions");
  }
  SurrogateState state;
  state.adjacency = std::move(adjacency);
  state.annotations.reserve(requests.size());
  for (const auto& q : requests) state.annotations.push_back(annotate(deployment, q));
  for (const auto& p : preference) {
    const double v = p.dist ? pref::normalize_preference(p.value, *p.dist) : 1.0;
    if (!std::isfinite(v) || v < 0.0) throw ContractViolation("assemble_state: preference must be finite and >= 0");
    state.preference.push_back(v);
  }
  return state;
}

Matrix scale_in_mask(const sim::Deployment& deployment, const sim::Topology& topology) {
  constexpr double kBlocked = -1e9;
  Matrix mask(deployment.num_nodes() * sim::kNumVnfTypes, 3);
  for (sim::NodeId n = 0; n < static_cast<sim::NodeId>(deployment.num_nodes()); ++n) {
    for (sim::VnfType f : sim::kAllVnfTypes) {
      const std::size_t row = static_cast<std::size_t>(n) * sim::kNumVnfTypes + static_cast<std::size_t>(f);
      if (!topology.is_up(n)) {
        mask(row, 0) = kBlocked;
        mask(row, 2) = kBlocked;
      } else if (deployment.count(n, f) == 0) {
        mask(row, 0) = kBlocked;
      }
    }
  }
  return mask;
}

}  // namespace prefnet::encoding
