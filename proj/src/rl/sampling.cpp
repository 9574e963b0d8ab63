#include "prefnet/rl/sampling.hpp"

#include <cmath>

#include "prefnet/core/errors.hpp"
#include "prefnet/sim/catalog.hpp"

namespace prefnet::rl {

namespace {

void check_rows(const Matrix& p) {
  if (p.cols() != 3 || p.rows() % sim::kNumVnfTypes != 0) {
    throw ContractViolation("action probabilities must be (|N|*|F|) x 3");
  }
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) {
      if (!(v >= 0.0)) throw ContractViolation("action probabilities must be >= 0");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-6) throw ContractViolation("action probability row does not sum to 1");
  }
}

ActionSample from_classes(const Matrix& p, std::vector<std::size_t> classes) {
  ActionSample out;
  out.action = sim::ActionMatrix(p.rows() / sim::kNumVnfTypes);
  for (std::size_t r = 0; r < classes.size(); ++r) out.action.values[r] = static_cast<std::int8_t>(classes[r]) - 1;
  out.log_prob = joint_log_prob(p, classes);
  out.classes = std::move(classes);
  return out;
}

}  // namespace

double joint_log_prob(const Matrix& probabilities, const std::vector<std::size_t>& classes) {
  double lp = 0.0;
  for (std::size_t r = 0; r < classes.size(); ++r) lp += std::log(probabilities(r, classes[r]));
  return lp;
}

ActionSample sample_action(const Matrix& probabilities, Rng& rng) {
  check_rows(probabilities);
  std::vector<std::size_t> classes(probabilities.rows());
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t pick = 2;
    for (std::size_t c = 0; c < 3; ++c) {
      acc += probabilities(r, c);
      if (u < acc) {
        pick = c;
        break;
      }
    }
    while (probabilities(r, pick) == 0.0 && pick > 0) --pick;  // guard against rounding past a zero tail
    classes[r] = pick;
  }
  return from_classes(probabilities, std::move(classes));
}

ActionSample greedy_action(const Matrix& probabilities) {
  check_rows(probabilities);
  std::vector<std::size_t> classes(probabilities.rows());
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
      if (probabilities(r, c) > probabilities(r, best)) best = c;
    classes[r] = best;
  }
  return from_classes(probabilities, std::move(classes));
}

}  // namespace prefnet::rl
