#include "prefnet/pref/fit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "prefnet/core/errors.hpp"
#include "prefnet/core/rng.hpp"
#include "prefnet/pref/distribution.hpp"

namespace prefnet::pref {

std::vector<EffectSample> offset_effects(std::span<const double> preferences, std::span<const double> raw_effects) {
  if (preferences.size() != raw_effects.size() || preferences.empty()) {
    throw ContractViolation("offset_effects: need one effect per preference");
  }
  const double floor = *std::min_element(raw_effects.begin(), raw_effects.end());
  std::vector<EffectSample> out;
  for (std::size_t i = 0; i < preferences.size(); ++i) out.push_back({preferences[i], raw_effects[i] - floor});
  return out;
}

double ExponentialFit::operator()(double preference) const { return v_max * std::exp(-lambda * preference); }

double fit_rss(std::span<const EffectSample> samples, double lambda, double v_max) {
  double rss = 0.0;
  for (const auto& s : samples) {
    const double r = s.effect - v_max * std::exp(-lambda * s.preference);
    rss += r * r;
  }
  return rss;
}

namespace {

struct Scaled {
  std::vector<double> alpha;
  std::vector<double> y;  // effect / v_max
};

// Loss and gradient w.r.t. (ln λ, ln c) for y ≈ c·exp(-λα).
double loss_and_grad(const Scaled& data, double log_lambda, double log_c, double& g_lambda, double& g_c) {
  const double lambda = std::exp(log_lambda);
  const double c = std::exp(log_c);
  double loss = 0.0;
  g_lambda = 0.0;
  g_c = 0.0;
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const double e = std::exp(-lambda * data.alpha[i]);
    const double r = data.y[i] - c * e;
    loss += r * r;
    g_lambda += 2.0 * r * c * e * lambda * data.alpha[i];
    g_c += -2.0 * r * c * e;
  }
  return loss;
}

double initial_lambda(const Scaled& data) {
  // ln(y) = -λα over points with y > 0 and α > 0 (least squares through origin).
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    if (data.y[i] > 0.0 && data.y[i] < 1.0 && data.alpha[i] > 0.0) {
      num += -std::log(data.y[i]) * data.alpha[i];
      den += data.alpha[i] * data.alpha[i];
    }
  }
  if (den > 0.0 && num > 0.0) return num / den;
  double mean_alpha = 0.0;
  for (double a : data.alpha) mean_alpha += std::abs(a);
  mean_alpha /= static_cast<double>(data.alpha.size());
  return mean_alpha > 0.0 ? 1.0 / mean_alpha : 1.0;
}

}  // namespace

ExponentialFit fit_exponential(std::span<const EffectSample> samples, const FitOptions& options) {
  if (samples.size() < 2) throw ContractViolation("fit_exponential: need at least 2 samples");
  std::set<double> distinct;
  double v_max = 0.0;
  double v_min = samples.front().effect;
  for (const auto& s : samples) {
    if (!std::isfinite(s.preference) || !std::isfinite(s.effect) || s.effect < 0.0) {
      throw ContractViolation("fit_exponential: effects must be finite and >= 0");
    }
    distinct.insert(s.preference);
    v_max = std::max(v_max, s.effect);
    v_min = std::min(v_min, s.effect);
  }
  if (distinct.size() < 2) throw ContractViolation("fit_exponential: need at least 2 distinct preferences");
  if (v_max == v_min) throw DegenerateFit("fit_exponential: all effects are equal");

  // Fit on V / v_max so that the result is invariant to effect scale.
  Scaled data;
  for (const auto& s : samples) {
    data.alpha.push_back(s.preference);
    data.y.push_back(s.effect / v_max);
  }

  double log_lambda = std::log(initial_lambda(data));
  double log_c = 0.0;
  double g_lambda = 0.0;
  double g_c = 0.0;
  double loss = loss_and_grad(data, log_lambda, log_c, g_lambda, g_c);
  double step = 1.0;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (!options.joint_v_max) g_c = 0.0;
    const double gnorm2 = g_lambda * g_lambda + g_c * g_c;
    if (gnorm2 == 0.0) break;
    // Backtracking (Armijo) along the negative gradient.
    double trial_loss = 0.0;
    double nl = 0.0;
    double nc = 0.0;
    step *= 2.0;
    while (true) {
      nl = log_lambda - step * g_lambda;
      nc = log_c - step * g_c;
      double tg1 = 0.0;
      double tg2 = 0.0;
      trial_loss = loss_and_grad(data, nl, nc, tg1, tg2);
      if (trial_loss <= loss - 1e-4 * step * gnorm2 || step < 1e-300) break;
      step *= 0.5;
    }
    const double old_lambda = std::exp(log_lambda);
    log_lambda = nl;
    log_c = nc;
    loss = loss_and_grad(data, log_lambda, log_c, g_lambda, g_c);
    const double new_lambda = std::exp(log_lambda);
    if (std::abs(new_lambda - old_lambda) / new_lambda < options.rel_tolerance) {
      ++iter;
      break;
    }
  }

  ExponentialFit fit;
  fit.lambda = std::exp(log_lambda);
  fit.v_max = v_max * std::exp(log_c);
  fit.rss = fit_rss(samples, fit.lambda, fit.v_max);
  fit.iterations = iter;
  if (!std::isfinite(fit.lambda) || !(fit.lambda > 0.0)) throw DegenerateFit("fit_exponential: lambda diverged");
  return fit;
}

double pushforward_ks(double sample_lambda, double map_lambda, double v_max, std::size_t n_samples,
                      std::uint64_t seed) {
  if (n_samples == 0) throw ContractViolation("pushforward_ks: n_samples must be >= 1");
  const auto dist = PreferenceDistribution::exponential(sample_lambda);
  Rng rng = make_rng(seed);
  std::vector<double> effects(n_samples);
  for (auto& v : effects) v = v_max * std::exp(-map_lambda * dist.sample(rng));
  std::sort(effects.begin(), effects.end());
  return ks_statistic(effects, [v_max](double v) { return std::clamp(v / v_max, 0.0, 1.0); });
}

nlohmann::json fit_report(const ExponentialFit& fit) {
  return {{"lambda", fit.lambda}, {"v_max", fit.v_max}, {"rss", fit.rss}, {"iters", fit.iterations}};
}

}  // namespace prefnet::pref
