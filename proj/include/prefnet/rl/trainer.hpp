#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "prefnet/datagen/record.hpp"
#include "prefnet/nn/model.hpp"
#include "prefnet/pref/distribution.hpp"
#include "prefnet/rl/agent.hpp"
#include "prefnet/rl/environment.hpp"
#include "prefnet/rl/ppo.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::rl {

// Where each episode's preference comes from during training.
struct PreferenceSource {
  // Dynamic: sampled per episode. Static (baseline): fixed values, and the
  // agent's preference input is pinned.
  bool is_static = false;
  std::optional<pref::PreferenceDistribution> alpha_dist;
  std::optional<pref::PreferenceDistribution> beta_dist;
  double static_alpha = 0.0;
  double static_beta = 0.0;

  static PreferenceSource dynamic(pref::PreferenceDistribution alpha,
                                  std::optional<pref::PreferenceDistribution> beta = std::nullopt);
  static PreferenceSource fixed(double alpha, std::optional<double> beta = std::nullopt);
};

struct TrainConfig {
  EnvConfig env;
  nn::ModelConfig model;
  PpoConfig ppo;
  std::size_t validation_interval = 0;  // in updates; 0 disables
  std::size_t validation_episodes = 4;
};

struct TrainResult {
  Agent agent;
  std::vector<double> reward_trace;  // one entry per environment step
  std::vector<nlohmann::json> log;
};

// Raised when a PPO update produces NaN/Inf; carries the last good agent.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, Agent last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const Agent& last_good() const { return last_good_; }

 private:
  Agent last_good_;
};

// Dynamic-preference PPO training loop. `log` (optional) receives one JSON
// line per update.
TrainResult train(const sim::Topology& topology, std::span<const datagen::DatasetRecord> train_set,
                  std::span<const datagen::DatasetRecord> validation_set, const PreferenceSource& preference,
                  const TrainConfig& config, std::ostream* log = nullptr);

// Greedy mean per-step reward over the first `episodes` windows.
double greedy_mean_reward(const Agent& agent, const sim::Topology& topology,
                          std::span<const datagen::DatasetRecord> records, const EnvConfig& env,
                          const Preference& preference, std::size_t episodes);

}  // namespace prefnet::rl
