#include "prefnet/eval/eval.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prefnet/core/errors.hpp"
#include "prefnet/core/rng.hpp"

namespace prefnet::eval {

namespace {

constexpr std::uint64_t kEvalPreferenceStream = 5;

void check_compatible(const rl::Agent& agent, const rl::EnvConfig& env) {
  if (agent.meta().task != env.task) {
    throw ContractViolation(std::string("evaluation: ") + rl::task_name(agent.meta().task) +
                            " checkpoint cannot run the " + rl::task_name(env.task) +
                            " task (preference dimension mismatch)");
  }
}

MetricReport rollout(const rl::Agent& agent, const sim::Topology& topology,
                     std::span<const datagen::DatasetRecord> records, const rl::EnvConfig& config,
                     const std::function<rl::Preference(std::size_t episode)>& preference_for) {
  check_compatible(agent, config);
  rl::ScalingEnv env(topology, records, config);
  MetricReport report;
  double reward_sum = 0.0, vnf_sum = 0.0, power_sum = 0.0;
  std::size_t episode = 0;
  for (std::size_t start = 0; start < records.size(); start += config.episode_length, ++episode) {
    EpisodeTrace trace;
    trace.start = start;
    trace.preference = preference_for(episode);
    const auto inputs = agent.preference_inputs(trace.preference);
    env.reset(start);
    while (!env.done()) {
      sim::ActionMatrix action(topology.num_nodes());
      if (auto state = env.observe(inputs)) action = agent.act_greedy(*state).action;
      const auto out = env.step(action, trace.preference);
      trace.rewards.push_back(out.reward);
      trace.vnf_totals.push_back(out.vnf_total);
      trace.power_watts.push_back(out.power_watts);
      trace.paths += out.paths;
      trace.violations += out.violations;
      reward_sum += out.reward;
      vnf_sum += out.vnf_total;
      power_sum += out.power_watts;
      ++report.steps;
    }
    report.paths += trace.paths;
    report.violations += trace.violations;
    report.episodes.push_back(std::move(trace));
  }
  if (report.steps > 0) {
    const auto steps = static_cast<double>(report.steps);
    report.mean_reward = reward_sum / steps;
    report.mean_vnf = vnf_sum / steps;
    report.mean_power = power_sum / steps;
  }
  report.slav = report.paths ? static_cast<double>(report.violations) / static_cast<double>(report.paths) : 0.0;
  return report;
}

}  // namespace

MetricReport eval_static(const rl::Agent& agent, const sim::Topology& topology,
                         std::span<const datagen::DatasetRecord> records, const rl::EnvConfig& env,
                         const rl::Preference& preference) {
  if (env.task == rl::Task::kPowerManagement && !preference.beta) {
    throw ContractViolation("evaluation: power management needs a beta preference");
  }
  return rollout(agent, topology, records, env, [&](std::size_t) { return preference; });
}

MetricReport eval_dynamic(const rl::Agent& agent, const sim::Topology& topology,
                          std::span<const datagen::DatasetRecord> records, const rl::EnvConfig& env,
                          const pref::PreferenceDistribution& alpha, const pref::PreferenceDistribution* beta,
                          std::uint64_t seed) {
  const bool pm = env.task == rl::Task::kPowerManagement;
  if (pm && !beta) throw ContractViolation("evaluation: power management needs a beta distribution");
  Rng rng = make_rng(seed, kEvalPreferenceStream);
  return rollout(agent, topology, records, env, [&](std::size_t episode) {
    rl::Preference p;
    const auto step = static_cast<std::int64_t>(episode);
    p.alpha = alpha.sample(rng, step);
    if (pm) p.beta = beta->sample(rng, step);
    return p;
  });
}

NormalizedRewards normalize_rewards(std::span<const double> rewards) {
  if (rewards.size() < 2) throw ContractViolation("normalize_rewards: need >= 2 reports");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());
  const double sd = std::sqrt(var);
  NormalizedRewards out;
  out.z.assign(rewards.size(), 0.0);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    out.zero_variance = true;
    return out;
  }
  for (std::size_t k = 0; k < rewards.size(); ++k) out.z[k] = (rewards[k] - mean) / sd;
  return out;
}

std::vector<TrajectoryPoint> run_scenario(const rl::Agent& agent, const sim::Topology& topology,
                                          std::span<const datagen::DatasetRecord> records, rl::EnvConfig env,
                                          const Scenario& scenario, const rl::Preference& initial) {
  validate(scenario, topology);
  Stepper stepper(agent, topology, records, env, initial);
  std::vector<TrajectoryPoint> trajectory;
  std::size_t next = 0;
  while (!stepper.finished()) {
    const std::int64_t t = stepper.tick();
    while (next < scenario.events.size() && scenario.events[next].t <= t) stepper.apply(scenario.events[next++]);
    auto out = stepper.step();
    TrajectoryPoint p;
    p.t = t;
    p.preference = stepper.preference();
    p.slav = out.paths ? static_cast<double>(out.violations) / static_cast<double>(out.paths) : 0.0;
    p.vnf_total = out.vnf_total;
    p.power_watts = out.power_watts;
    p.reward = out.reward;
    p.paths = std::move(out.routed);
    trajectory.push_back(std::move(p));
  }
  return trajectory;
}

EffectKind parse_effect_kind(std::string_view text) {
  if (text == "vnf_count" || text == "vnf") return EffectKind::kVnfCount;
  if (text == "power") return EffectKind::kPower;
  throw ConfigError("unknown effect kind '" + std::string(text) + "' (expected vnf_count|power)");
}

std::vector<pref::EffectSample> collect_effects(std::span<const rl::Agent> agents, const sim::Topology& topology,
                                                std::span<const datagen::DatasetRecord> records,
                                                const rl::EnvConfig& env, EffectKind kind) {
  if (agents.size() < 2) throw ContractViolation("collect_effects: need >= 2 checkpoints");
  std::vector<double> prefs, effects;
  for (const auto& agent : agents) {
    if (!agent.meta().static_preference) {
      throw ContractViolation("collect_effects: checkpoints must be static-preference agents");
    }
    const auto p = agent.nominal_preference();
    const auto report = eval_static(agent, topology, records, env, p);
    if (kind == EffectKind::kPower) {
      if (!p.beta) throw ContractViolation("collect_effects: power effect needs power-management checkpoints");
      prefs.push_back(*p.beta);
      effects.push_back(report.mean_power);
    } else {
      prefs.push_back(p.alpha);
      effects.push_back(report.mean_vnf);
    }
  }
  return pref::offset_effects(prefs, effects);
}

namespace {

nlohmann::json preference_json(const rl::Preference& p) {
  nlohmann::json j{{"alpha", p.alpha}};
  if (p.beta) j["beta"] = *p.beta;
  return j;
}

}  // namespace

nlohmann::json to_json(const MetricReport& report, bool with_episodes) {
  nlohmann::json j{{"mean_reward", report.mean_reward}, {"slav", report.slav},   {"mean_vnf", report.mean_vnf},
                   {"mean_power", report.mean_power},   {"steps", report.steps}, {"paths", report.paths},
                   {"violations", report.violations}};
  nlohmann::json prefs = nlohmann::json::array();
  for (const auto& e : report.episodes) prefs.push_back(preference_json(e.preference));
  j["episode_preferences"] = std::move(prefs);
  if (with_episodes) {
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& e : report.episodes) {
      eps.push_back({{"start", e.start},
                     {"preference", preference_json(e.preference)},
                     {"rewards", e.rewards},
                     {"vnf_totals", e.vnf_totals},
                     {"power_watts", e.power_watts},
                     {"paths", e.paths},
                     {"violations", e.violations}});
    }
    j["episodes"] = std::move(eps);
  }
  return j;
}

nlohmann::json to_json(const TrajectoryPoint& point) {
  return {{"t", point.t},
          {"preference", preference_json(point.preference)},
          {"slav", point.slav},
          {"vnf_total", point.vnf_total},
          {"power_watts", point.power_watts},
          {"reward", point.reward}};
}

std::string comparison_csv(std::span<const std::string> agents, std::span<const std::string> settings,
                           const std::vector<std::vector<double>>& values) {
  if (values.size() != agents.size()) throw ContractViolation("comparison_csv: one row per agent");
  std::ostringstream out;
  out << "agent";
  for (const auto& s : settings) out << ',' << s;
  out << '\n';
  for (std::size_t r = 0; r < agents.size(); ++r) {
    if (values[r].size() != settings.size()) throw ContractViolation("comparison_csv: one column per setting");
    out << agents[r];
    for (double v : values[r]) out << ',' << pref::format_number(v);
    out << '\n';
  }
  return out.str();
}

}  // namespace prefnet::eval
