#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prefnet/eval/stepper.hpp"
#include "prefnet/pref/distribution.hpp"
#include "prefnet/pref/fit.hpp"
#include "prefnet/rl/agent.hpp"
#include "prefnet/rl/environment.hpp"

namespace prefnet::eval {

struct EpisodeTrace {
  std::size_t start = 0;
  rl::Preference preference;
  std::vector<double> rewards;
  std::vector<int> vnf_totals;
  std::vector<double> power_watts;
  std::size_t paths = 0;
  std::size_t violations = 0;
};

struct MetricReport {
  double mean_reward = 0.0;
  double slav = 0.0;  // violated paths / total paths
  double mean_vnf = 0.0;
  double mean_power = 0.0;  // watts per step
  std::size_t steps = 0;
  std::size_t paths = 0;
  std::size_t violations = 0;
  std::vector<EpisodeTrace> episodes;
};

// Greedy rollout over consecutive episode windows of `records` (the whole
// split once) at a fixed preference.
MetricReport eval_static(const rl::Agent& agent, const sim::Topology& topology,
                         std::span<const datagen::DatasetRecord> records, const rl::EnvConfig& env,
                         const rl::Preference& preference);

// Same, with the preference redrawn per episode. `beta` is required for PM.
MetricReport eval_dynamic(const rl::Agent& agent, const sim::Topology& topology,
                          std::span<const datagen::DatasetRecord> records, const rl::EnvConfig& env,
                          const pref::PreferenceDistribution& alpha, const pref::PreferenceDistribution* beta,
                          std::uint64_t seed);

struct NormalizedRewards {
  std::vector<double> z;
  bool zero_variance = false;
};

// z = (r - mean) / population std over the cohort.
NormalizedRewards normalize_rewards(std::span<const double> rewards);

struct TrajectoryPoint {
  std::int64_t t = 0;
  rl::Preference preference;
  double slav = 0.0;
  int vnf_total = 0;
  double power_watts = 0.0;
  double reward = 0.0;
  std::vector<sim::SfcPath> paths;
};

// Applies events at their timestamps (before the step at that t) over the
// whole slice.
std::vector<TrajectoryPoint> run_scenario(const rl::Agent& agent, const sim::Topology& topology,
                                          std::span<const datagen::DatasetRecord> records, rl::EnvConfig env,
                                          const Scenario& scenario, const rl::Preference& initial);

enum class EffectKind { kVnfCount, kPower };
EffectKind parse_effect_kind(std::string_view text);

// Static-preference agents evaluated at their own preference; the chosen
// effect is averaged and offset so the grid minimum is 0. For kPower the
// varied preference is β, otherwise α.
std::vector<pref::EffectSample> collect_effects(std::span<const rl::Agent> agents, const sim::Topology& topology,
                                                std::span<const datagen::DatasetRecord> records,
                                                const rl::EnvConfig& env, EffectKind kind);

nlohmann::json to_json(const MetricReport& report, bool with_episodes = false);
nlohmann::json to_json(const TrajectoryPoint& point);

// Rows = agents, columns = settings.
std::string comparison_csv(std::span<const std::string> agents, std::span<const std::string> settings,
                           const std::vector<std::vector<double>>& values);

}  // namespace prefnet::eval
