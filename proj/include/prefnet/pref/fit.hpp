#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace prefnet::pref {

struct EffectSample {
  double preference = 0.0;
  double effect = 0.0;  // offset-subtracted, >= 0
};

// Raw effect averages -> samples with the grid minimum subtracted.
std::vector<EffectSample> offset_effects(std::span<const double> preferences, std::span<const double> raw_effects);

// V = v_max · exp(-λ·α).
struct ExponentialFit {
  double lambda = 0.0;
  double v_max = 0.0;
  double rss = 0.0;
  int iterations = 0;

  double operator()(double preference) const;
};

struct FitOptions {
  bool joint_v_max = false;  // default: v_max = max observed effect
  int max_iterations = 100000;
  double rel_tolerance = 1e-8;
};

// Least-squares fit of λ by gradient descent on ln λ with backtracking line
// search. Throws DegenerateFit when every effect is equal.
ExponentialFit fit_exponential(std::span<const EffectSample> samples, const FitOptions& options = {});

double fit_rss(std::span<const EffectSample> samples, double lambda, double v_max);

// KS distance between f(α), α ~ Exp(sample_lambda), f = v_max·exp(-map_lambda·α),
// and Unif[0, v_max].
double pushforward_ks(double sample_lambda, double map_lambda, double v_max, std::size_t n_samples,
                      std::uint64_t seed);

inline double pushforward_check(const ExponentialFit& fit, std::size_t n_samples, std::uint64_t seed) {
  return pushforward_ks(fit.lambda, fit.lambda, fit.v_max, n_samples, seed);
}

// Two-sided KS statistic of sorted samples against a continuous CDF.
template <typename Cdf>
double ks_statistic(std::span<const double> sorted, Cdf cdf) {
  const double n = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double lo = f - static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n - f;
    worst = std::max(worst, std::max(lo, hi));
  }
  return worst;
}

nlohmann::json fit_report(const ExponentialFit& fit);

}  // namespace prefnet::pref
