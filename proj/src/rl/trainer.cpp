#include "prefnet/rl/trainer.hpp"

#include <cmath>

#include "prefnet/core/errors.hpp"
#include "prefnet/rl/sampling.hpp"

namespace prefnet::rl {

namespace {

// RNG streams derived from the master seed.
constexpr std::uint64_t kActionStream = 1;
constexpr std::uint64_t kEpisodeStream = 2;
constexpr std::uint64_t kPreferenceStream = 3;

AgentMeta make_meta(const sim::Topology& topology, const PreferenceSource& source, const TrainConfig& config) {
  AgentMeta meta;
  meta.task = config.env.task;
  meta.topology = topology.name();
  meta.model = config.model;
  meta.model.pref_dims = preference_dims(config.env.task);
  meta.static_preference = source.is_static;
  meta.alpha_dist = source.alpha_dist;
  meta.beta_dist = source.beta_dist;
  meta.static_alpha = source.static_alpha;
  meta.static_beta = source.static_beta;
  meta.seed = config.ppo.seed;
  meta.sla_ms = config.env.sla_ms;
  return meta;
}

Preference draw_preference(const PreferenceSource& source, Task task, Rng& rng, std::int64_t episode) {
  Preference p;
  if (source.is_static) {
    p.alpha = source.static_alpha;
    if (task == Task::kPowerManagement) p.beta = source.static_beta;
    return p;
  }
  p.alpha = source.alpha_dist->sample(rng, episode);
  if (task == Task::kPowerManagement) p.beta = source.beta_dist->sample(rng, episode);
  return p;
}

}  // namespace

PreferenceSource PreferenceSource::dynamic(pref::PreferenceDistribution alpha,
                                           std::optional<pref::PreferenceDistribution> beta) {
  PreferenceSource s;
  s.alpha_dist = std::move(alpha);
  s.beta_dist = std::move(beta);
  return s;
}

PreferenceSource PreferenceSource::fixed(double alpha, std::optional<double> beta) {
  PreferenceSource s;
  s.is_static = true;
  s.static_alpha = alpha;
  s.static_beta = beta.value_or(0.0);
  return s;
}

double greedy_mean_reward(const Agent& agent, const sim::Topology& topology,
                          std::span<const datagen::DatasetRecord> records, const EnvConfig& env,
                          const Preference& preference, std::size_t episodes) {
  ScalingEnv sim_env(topology, records, env);
  const auto inputs = agent.preference_inputs(preference);
  double total = 0.0;
  std::size_t steps = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    const std::size_t start = e * env.episode_length;
    if (start >= records.size()) break;
    sim_env.reset(start);
    while (!sim_env.done()) {
      auto state = sim_env.observe(inputs);
      sim::ActionMatrix action(topology.num_nodes());
      if (state) action = agent.act_greedy(*state).action;
      total += sim_env.step(action, preference).reward;
      ++steps;
    }
  }
  return steps ? total / static_cast<double>(steps) : 0.0;
}

TrainResult train(const sim::Topology& topology, std::span<const datagen::DatasetRecord> train_set,
                  std::span<const datagen::DatasetRecord> validation_set, const PreferenceSource& source,
                  const TrainConfig& config, std::ostream* log) {
  if (train_set.empty()) throw ContractViolation("train: dataset is empty");
  const Task task = config.env.task;
  if (!source.is_static) {
    if (!source.alpha_dist) throw ConfigError("train: alpha distribution required");
    if (task == Task::kPowerManagement && !source.beta_dist) throw ConfigError("train: PM task requires a beta distribution");
  }
  validate(config.ppo);

  AgentMeta meta = make_meta(topology, source, config);
  PpoLearner learner(nn::PolicyValueNet(meta.model, config.ppo.seed), config.ppo);
  Agent probe(meta, learner.policy());  // normalization helper; weights unused

  ScalingEnv env(topology, train_set, config.env);
  Rng action_rng = make_rng(config.ppo.seed, kActionStream);
  Rng episode_rng = make_rng(config.ppo.seed, kEpisodeStream);
  Rng pref_rng = make_rng(config.ppo.seed, kPreferenceStream);

  const std::size_t episode_len = std::min(config.env.episode_length, train_set.size());
  const std::size_t max_start = train_set.size() - episode_len;
  auto start_episode = [&]() { env.reset(max_start ? episode_rng() % (max_start + 1) : 0); };

  TrainResult result{Agent(meta, learner.policy()), {}, {}};
  std::vector<Transition> storage;
  storage.reserve(config.ppo.update_interval);
  std::int64_t episode = 0;
  Preference current = draw_preference(source, task, pref_rng, episode);
  start_episode();
  double batch_alpha = 0.0, batch_beta = 0.0;
  std::size_t batch_episodes = 0;
  std::size_t updates = 0;

  for (std::size_t iter = 1; iter <= config.ppo.total_steps; ++iter) {
    const auto inputs = probe.preference_inputs(current);
    auto state = env.observe(inputs);
    StepOutcome outcome;
    if (state) {
      nn::NoGradGuard guard;
      auto out = learner.behaviour_policy().forward(*state);
      Matrix probs = out.log_probs.to_matrix();
      for (double& v : probs.data()) v = std::exp(v);
      ActionSample sample = sample_action(probs, action_rng);
      outcome = env.step(sample.action, current);
      Transition t;
      t.state = std::move(*state);
      t.classes = std::move(sample.classes);
      t.log_prob = sample.log_prob;
      t.reward = outcome.reward;
      t.value = out.value.item();
      t.done = env.done();
      t.preference = current;
      storage.push_back(std::move(t));
    } else {
      outcome = env.step(sim::ActionMatrix(topology.num_nodes()), current);
      if (!storage.empty() && env.done()) storage.back().done = true;
    }
    result.reward_trace.push_back(outcome.reward);

    if (env.done()) {
      batch_alpha += current.alpha;
      batch_beta += current.beta.value_or(0.0);
      ++batch_episodes;
      ++episode;
      current = draw_preference(source, task, pref_rng, episode);
      start_episode();
    }

    if (iter % config.ppo.update_interval == 0 && !storage.empty()) {
      double bootstrap = 0.0;
      if (!storage.back().done) {
        if (auto next = env.observe(probe.preference_inputs(current))) {
          nn::NoGradGuard guard;
          bootstrap = learner.behaviour_policy().forward(*next).value.item();
        }
      }
      double mean_reward = 0.0;
      for (const auto& t : storage) mean_reward += t.reward;
      mean_reward /= static_cast<double>(storage.size());
      LossReport report;
      try {
        report = learner.update(storage, bootstrap);
      } catch (const NonFinite& e) {
        throw TrainingDiverged(std::string("training diverged at step ") + std::to_string(iter) + ": " + e.what(),
                               result.agent);
      }
      ++updates;
      result.agent = Agent(meta, learner.policy());

      nlohmann::json rec{{"iter", iter},
                         {"mean_reward", mean_reward},
                         {"actor_loss", report.actor_loss},
                         {"critic_loss", report.critic_loss},
                         {"alpha_sampled", batch_episodes ? batch_alpha / batch_episodes : current.alpha}};
      if (task == Task::kPowerManagement) {
        rec["beta_sampled"] = batch_episodes ? batch_beta / batch_episodes : current.beta.value_or(0.0);
      }
      if (config.validation_interval && updates % config.validation_interval == 0 && !validation_set.empty()) {
        rec["val_reward"] = greedy_mean_reward(result.agent, topology, validation_set, config.env,
                                               result.agent.nominal_preference(), config.validation_episodes);
      }
      if (log) *log << rec.dump() << '\n';
      result.log.push_back(std::move(rec));
      batch_alpha = batch_beta = 0.0;
      batch_episodes = 0;
    }
  }
  result.agent = Agent(meta, learner.policy());
  return result;
}

}  // namespace prefnet::rl
