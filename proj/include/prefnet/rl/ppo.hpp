#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "prefnet/core/rng.hpp"
#include "prefnet/encoding/encoding.hpp"
#include "prefnet/nn/model.hpp"
#include "prefnet/rl/environment.hpp"
#include "prefnet/sim/deployment.hpp"

namespace prefnet::rl {

enum class OptimizerKind { kAdam, kSgd };

struct PpoConfig {
  double learning_rate = 3e-4;       // η
  std::size_t update_interval = 256; // i_update, in environment steps
  std::size_t total_steps = 20000;   // i_end
  double clip = 0.2;                 // ε
  double gamma = 0.99;
  double gae_lambda = 0.95;
  std::size_t epochs = 4;
  std::size_t minibatch = 64;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;  // 0 disables clipping
  bool normalize_advantages = true;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 0;
};

void validate(const PpoConfig& config);

struct Transition {
  encoding::SurrogateState state;
  std::vector<std::size_t> classes;  // chosen class per (node, type)
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  Preference preference;
};

struct LossReport {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  std::size_t transitions = 0;
};

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation over a storage laid out in time order;
// `bootstrap` is V(s_{T}) for a trailing unfinished episode.
Advantages compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                       double bootstrap, double gamma, double lambda);

struct TransitionLoss {
  nn::Tensor total;
  nn::Tensor actor;
  nn::Tensor critic;
  nn::Tensor entropy;
};

// Per-transition PPO objective: clipped surrogate + value_coef·(V-R)^2 - entropy_coef·H.
TransitionLoss ppo_loss(const nn::PolicyValueNet& net, const Transition& t, double advantage, double target,
                        const PpoConfig& config);

// Owns θ (trained) and θ_old (acting). After update(), θ_old == θ.
class PpoLearner {
 public:
  PpoLearner(nn::PolicyValueNet net, PpoConfig config);

  const nn::PolicyValueNet& policy() const { return net_; }
  const nn::PolicyValueNet& behaviour_policy() const { return old_net_; }
  nn::PolicyValueNet& mutable_policy() { return net_; }
  const PpoConfig& config() const { return config_; }

  // Consumes and clears `storage`. Throws NonFinite on divergence.
  LossReport update(std::vector<Transition>& storage, double bootstrap_value);

 private:
  void apply_gradients(double scale);

  nn::PolicyValueNet net_;
  nn::PolicyValueNet old_net_;
  PpoConfig config_;
  Rng shuffle_rng_;
  std::vector<std::vector<double>> adam_m_;
  std::vector<std::vector<double>> adam_v_;
  std::uint64_t adam_step_ = 0;
};

}  // namespace prefnet::rl
