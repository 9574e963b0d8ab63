#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "prefnet/core/matrix.hpp"
#include "prefnet/pref/distribution.hpp"
#include "prefnet/sim/deployment.hpp"
#include "prefnet/sim/request.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::encoding {

// Columns of an annotation matrix: |F| instance counts, then src and dst flags.
inline constexpr std::size_t kAnnotationCols = sim::kNumVnfTypes + 2;

// M[i][j] = 1 / e(n_i, n_j) for adjacent up nodes, else 0.
Matrix adjacency(const sim::Topology& topology);

// X_q ∈ N^{|N| x (|F|+2)}.
Matrix annotate(const sim::Deployment& deployment, const sim::ServiceRequest& request);

// Per-dimension normalization source: a distribution, or a static agent's
// pinned input of 1.0.
struct PreferenceInput {
  double value = 0.0;
  const pref::PreferenceDistribution* dist = nullptr;  // nullptr -> static (1.0)
};

// ŝ = (s, ω̂).
struct SurrogateState {
  std::shared_ptr<const Matrix> adjacency;
  std::vector<Matrix> annotations;
  std::vector<double> preference;  // normalized; 1 entry (AS) or 2 (PM)
  // Optional (|N|·|F|) x 3 additive logit mask (0 or a large negative).
  std::shared_ptr<const Matrix> logit_mask;

  std::size_t num_nodes() const { return adjacency ? adjacency->rows() : 0; }
};

SurrogateState assemble_state(std::shared_ptr<const Matrix> adjacency, std::span<const sim::ServiceRequest> requests,
                              const sim::Deployment& deployment, std::span<const PreferenceInput> preference);

// Masks scale-in at empty cells and everything but keep at down nodes.
Matrix scale_in_mask(const sim::Deployment& deployment, const sim::Topology& topology);

}  // namespace prefnet::encoding
