#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prefnet/encoding/encoding.hpp"
#include "prefnet/nn/checkpoint.hpp"
#include "prefnet/nn/model.hpp"
#include "prefnet/pref/distribution.hpp"
#include "prefnet/rl/environment.hpp"
#include "prefnet/rl/sampling.hpp"

namespace prefnet::rl {

struct AgentMeta {
  Task task = Task::kAutoScaling;
  std::string topology;
  nn::ModelConfig model;
  // Static (baseline) agents ignore the runtime preference; their preference
  // input is pinned to 1.0.
  bool static_preference = false;
  std::optional<pref::PreferenceDistribution> alpha_dist;
  std::optional<pref::PreferenceDistribution> beta_dist;
  double static_alpha = 0.0;
  double static_beta = 0.0;
  std::uint64_t seed = 0;
  double sla_ms = 0.0;
};

class Agent {
 public:
  Agent(AgentMeta meta, nn::PolicyValueNet net);

  const AgentMeta& meta() const { return meta_; }
  nn::PolicyValueNet& net() { return net_; }
  const nn::PolicyValueNet& net() const { return net_; }

  // Normalization sources for the runtime preference.
  std::vector<encoding::PreferenceInput> preference_inputs(const Preference& preference) const;
  // The preference this agent was trained around (distribution mean or static value).
  Preference nominal_preference() const;

  Matrix action_probabilities(const encoding::SurrogateState& state) const;
  ActionSample act_greedy(const encoding::SurrogateState& state) const;

  nn::Checkpoint to_checkpoint() const;
  static Agent from_checkpoint(const nn::Checkpoint& checkpoint);
  void save(const std::filesystem::path& path) const;
  static Agent load(const std::filesystem::path& path);

 private:
  AgentMeta meta_;
  nn::PolicyValueNet net_;
};

nlohmann::json to_json(const AgentMeta& meta);
AgentMeta agent_meta_from_json(const nlohmann::json& j);

}  // namespace prefnet::rl
