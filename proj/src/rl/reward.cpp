#include "prefnet/rl/reward.hpp"

#include <cmath>

#include "prefnet/core/errors.hpp"

namespace prefnet::rl {

double qos_term(std::span<const PathDelay> delays) {
  if (delays.empty()) throw ContractViolation("reward: request set is empty");
  double sum = 0.0;
  for (const auto& d : delays) {
    if (!(d.sla_ms > 0.0)) throw ContractViolation("reward: SLA must be > 0");
    sum += d.delay_ms / d.sla_ms;
  }
  return -sum / static_cast<double>(delays.size());
}

double reward_as(std::span<const PathDelay> delays, int vnf_total, double alpha) {
  return qos_term(delays) - alpha * static_cast<double>(vnf_total);
}

double reward_pm(std::span<const PathDelay> delays, int vnf_total, double power_total, double alpha, double beta) {
  return reward_as(delays, vnf_total, alpha) - beta * power_total;
}

}  // namespace prefnet::rl
