#pragma once

#include <span>

namespace prefnet::rl {

struct PathDelay {
  double delay_ms = 0.0;
  double sla_ms = 1.0;
};

// R = -(1/|Q|) Σ ζ(p_q)/ζ_SLA - α Σ_f N(f)
double reward_as(std::span<const PathDelay> delays, int vnf_total, double alpha);

// reward_as(...) - β · power_total
double reward_pm(std::span<const PathDelay> delays, int vnf_total, double power_total, double alpha, double beta);

// -(1/|Q|) Σ ζ/ζ_SLA alone.
double qos_term(std::span<const PathDelay> delays);

}  // namespace prefnet::rl
