#pragma once

#include <vector>

#include "prefnet/core/matrix.hpp"
#include "prefnet/core/rng.hpp"
#include "prefnet/sim/deployment.hpp"

namespace prefnet::rl {

// Class index c ∈ {0,1,2} maps to action c - 1 (scale-in, keep, scale-out).
struct ActionSample {
  sim::ActionMatrix action;
  std::vector<std::size_t> classes;
  double log_prob = 0.0;  // Σ over cells of the chosen class log-probability
};

// One categorical draw per (node, type) row. Rows must sum to 1 (±1e-6).
ActionSample sample_action(const Matrix& probabilities, Rng& rng);

// Argmax per row; ties go to the lower class index.
ActionSample greedy_action(const Matrix& probabilities);

// Σ_r log p[r][classes[r]].
double joint_log_prob(const Matrix& probabilities, const std::vector<std::size_t>& classes);

}  // namespace prefnet::rl
