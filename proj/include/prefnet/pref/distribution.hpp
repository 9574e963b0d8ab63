#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prefnet/core/rng.hpp"

namespace prefnet::pref {

enum class DistKind { kExponential, kUniform, kPoint, kSchedule };

struct ScheduleEntry {
  std::int64_t step = 0;
  double value = 0.0;
  bool operator==(const ScheduleEntry&) const = default;
};

// Distribution over one preference dimension (α or β; dimensions are
// independent). Immutable after construction.
class PreferenceDistribution {
 public:
  static PreferenceDistribution exponential(double lambda);
  static PreferenceDistribution uniform(double lo, double hi);
  static PreferenceDistribution point(double value);
  static PreferenceDistribution schedule(std::vector<ScheduleEntry> entries);

  // "exp:145.45", "unif:0:0.05", "point:0.0063", "sched:0=0.0015,50=0.0317".
  static PreferenceDistribution parse(std::string_view spec);
  std::string spec() const;

  DistKind kind() const { return kind_; }
  double lambda() const { return a_; }
  double lo() const { return a_; }
  double hi() const { return b_; }
  double point_value() const { return a_; }
  const std::vector<ScheduleEntry>& entries() const { return entries_; }

  // Schedule: mean of the entry values.
  double mean() const;
  double density(double x) const;
  double cdf(double x) const;
  // Exponential: -ln(1-q)/λ; q must lie in [0,1). Bounded kinds accept q = 1.
  double quantile(double q) const;
  // Inverse-CDF draw; always consumes exactly one uniform from rng.
  // A schedule ignores the draw and returns its value at `step`.
  double sample(Rng& rng, std::int64_t step = 0) const;
  // Value in effect at `step` (last entry with entry.step <= step).
  double value_at(std::int64_t step) const;

  bool operator==(const PreferenceDistribution&) const = default;

 private:
  DistKind kind_ = DistKind::kPoint;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<ScheduleEntry> entries_;
};

// α̂ = α / E[α]. Throws NormalizationUndefined when E[α] <= 0.
double normalize_preference(double value, const PreferenceDistribution& dist);

// Shortest round-trip decimal form.
std::string format_number(double value);

}  // namespace prefnet::pref
