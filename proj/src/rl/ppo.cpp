#include "prefnet/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "prefnet/core/errors.hpp"

namespace prefnet::rl {

void validate(const PpoConfig& c) {
  if (!(c.clip > 0.0 && c.clip < 1.0)) throw ConfigError("ppo: clip must lie in (0,1)");
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw ConfigError("ppo: gamma must lie in [0,1)");
  if (!(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0)) throw ConfigError("ppo: gae_lambda must lie in [0,1]");
  if (c.update_interval < 1) throw ConfigError("ppo: update_interval must be >= 1");
  if (c.epochs < 1 || c.minibatch < 1) throw ConfigError("ppo: epochs and minibatch must be >= 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("ppo: learning_rate must be > 0");
}

Advantages compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                       double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ContractViolation("compute_gae: length mismatch");
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = bootstrap;
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double mask = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * mask - values[k];
    running = delta + gamma * lambda * mask * running;
    out.advantages[k] = running;
    out.returns[k] = running + values[k];
    next_value = values[k];
  }
  return out;
}

TransitionLoss ppo_loss(const nn::PolicyValueNet& net, const Transition& t, double advantage, double target,
                        const PpoConfig& config) {
  auto out = net.forward(t.state);
  nn::Tensor log_prob = nn::sum(nn::pick(out.log_probs, t.classes));
  nn::Tensor ratio = nn::exp(nn::add_scalar(log_prob, -t.log_prob));
  nn::Tensor surr1 = nn::scale(ratio, advantage);
  nn::Tensor surr2 = nn::scale(nn::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip), advantage);
  nn::Tensor actor = nn::scale(nn::minimum(surr1, surr2), -1.0);
  nn::Tensor critic = nn::square(nn::add_scalar(out.value, -target));
  // Mean per-cell categorical entropy.
  nn::Tensor probs = nn::exp(out.log_probs);
  nn::Tensor entropy = nn::scale(nn::sum(nn::mul(probs, out.log_probs)), -1.0 / static_cast<double>(out.log_probs.rows()));
  nn::Tensor total = nn::sub(nn::add(actor, nn::scale(critic, config.value_coef)), nn::scale(entropy, config.entropy_coef));
  return {total, actor, critic, entropy};
}

PpoLearner::PpoLearner(nn::PolicyValueNet net, PpoConfig config)
    : net_(std::move(net)), old_net_(net_), config_(config), shuffle_rng_(make_rng(config.seed, 4)) {
  validate(config_);
  for (const auto& [name, t] : net_.named_parameters()) {
    adam_m_.emplace_back(t.size(), 0.0);
    adam_v_.emplace_back(t.size(), 0.0);
  }
}

void PpoLearner::apply_gradients(double scale) {
  auto params = net_.named_parameters();
  double norm2 = 0.0;
  for (const auto& [name, t] : params) {
    for (double g : t.grad()) norm2 += (g * scale) * (g * scale);
  }
  if (!std::isfinite(norm2)) throw NonFinite("ppo: non-finite gradient");
  double clip_scale = 1.0;
  const double norm = std::sqrt(norm2);
  if (config_.max_grad_norm > 0.0 && norm > config_.max_grad_norm) clip_scale = config_.max_grad_norm / norm;
  const double s = scale * clip_scale;
  ++adam_step_;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].second.value();
    auto grads = params[k].second.grad();
    if (grads.empty()) continue;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i] * s;
      if (config_.optimizer == OptimizerKind::kSgd) {
        values[i] -= config_.learning_rate * g;
      } else {
        adam_m_[k][i] = b1 * adam_m_[k][i] + (1.0 - b1) * g;
        adam_v_[k][i] = b2 * adam_v_[k][i] + (1.0 - b2) * g * g;
        values[i] -= config_.learning_rate * (adam_m_[k][i] / c1) / (std::sqrt(adam_v_[k][i] / c2) + eps);
      }
    }
  }
}

LossReport PpoLearner::update(std::vector<Transition>& storage, double bootstrap_value) {
  if (storage.empty()) throw ContractViolation("ppo_update: replay storage is empty");
  const std::size_t n = storage.size();
  std::vector<double> rewards(n), values(n);
  auto dones = std::make_unique<bool[]>(n);
  for (std::size_t k = 0; k < n; ++k) {
    rewards[k] = storage[k].reward;
    values[k] = storage[k].value;
    dones[k] = storage[k].done;
  }
  Advantages adv = compute_gae(rewards, values, std::span<const bool>(dones.get(), n), bootstrap_value, config_.gamma,
                               config_.gae_lambda);
  std::vector<double> normalized = adv.advantages;
  if (config_.normalize_advantages) {
    const double mean = std::accumulate(normalized.begin(), normalized.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : normalized) var += (a - mean) * (a - mean);
    const double stdev = std::sqrt(var / static_cast<double>(n));
    for (double& a : normalized) a = stdev > 1e-12 ? (a - mean) / stdev : 0.0;
  }

  LossReport report;
  report.transitions = n;
  std::size_t terms = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng_);
    for (std::size_t start = 0; start < n; start += config_.minibatch) {
      const std::size_t stop = std::min(n, start + config_.minibatch);
      net_.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        auto loss = ppo_loss(net_, storage[idx], normalized[idx], adv.returns[idx], config_);
        nn::backward(loss.total);
        report.actor_loss += loss.actor.item();
        report.critic_loss += loss.critic.item();
        report.entropy += loss.entropy.item();
        ++terms;
      }
      apply_gradients(1.0 / static_cast<double>(stop - start));
    }
  }
  report.actor_loss /= static_cast<double>(terms);
  report.critic_loss /= static_cast<double>(terms);
  report.entropy /= static_cast<double>(terms);
  if (!std::isfinite(report.actor_loss) || !std::isfinite(report.critic_loss)) {
    throw NonFinite("ppo_update: non-finite loss");
  }
  old_net_ = net_;
  storage.clear();
  return report;
}

}  // namespace prefnet::rl
