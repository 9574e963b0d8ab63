#include "prefnet/rl/agent.hpp"

#include <cmath>

#include "prefnet/core/errors.hpp"

namespace prefnet::rl {

Agent::Agent(AgentMeta meta, nn::PolicyValueNet net) : meta_(std::move(meta)), net_(std::move(net)) {
  if (net_.config().pref_dims != preference_dims(meta_.task)) {
    throw ContractViolation("agent: model preference width does not match the task");
  }
  if (!meta_.static_preference) {
    if (!meta_.alpha_dist) throw ConfigError("agent: dynamic agent needs an alpha distribution");
    if (meta_.task == Task::kPowerManagement && !meta_.beta_dist) {
      throw ConfigError("agent: power-management agent needs a beta distribution");
    }
  }
}

std::vector<encoding::PreferenceInput> Agent::preference_inputs(const Preference& preference) const {
  std::vector<encoding::PreferenceInput> out;
  const bool pm = meta_.task == Task::kPowerManagement;
  if (pm && !preference.beta) throw ContractViolation("agent: power-management agent needs a beta preference");
  if (meta_.static_preference) {
    out.push_back({preference.alpha, nullptr});
    if (pm) out.push_back({*preference.beta, nullptr});
    return out;
  }
  out.push_back({preference.alpha, &*meta_.alpha_dist});
  if (pm) out.push_back({*preference.beta, &*meta_.beta_dist});
  return out;
}

Preference Agent::nominal_preference() const {
  Preference p;
  const bool pm = meta_.task == Task::kPowerManagement;
  if (meta_.static_preference) {
    p.alpha = meta_.static_alpha;
    if (pm) p.beta = meta_.static_beta;
  } else {
    p.alpha = meta_.alpha_dist->mean();
    if (pm) p.beta = meta_.beta_dist->mean();
  }
  return p;
}

Matrix Agent::action_probabilities(const encoding::SurrogateState& state) const {
  nn::NoGradGuard guard;
  auto out = net_.forward(state);
  Matrix p = out.log_probs.to_matrix();
  for (double& v : p.data()) v = std::exp(v);
  return p;
}

ActionSample Agent::act_greedy(const encoding::SurrogateState& state) const {
  return greedy_action(action_probabilities(state));
}

nlohmann::json to_json(const AgentMeta& m) {
  nlohmann::json j;
  j["task"] = task_name(m.task);
  j["topology"] = m.topology;
  j["model"] = nn::to_json(m.model);
  j["P"] = m.model.pref_dims;
  j["d"] = m.model.hidden;
  j["T"] = m.model.steps;
  j["static_preference"] = m.static_preference;
  j["alpha_dist"] = m.alpha_dist ? nlohmann::json(m.alpha_dist->spec()) : nlohmann::json(nullptr);
  j["beta_dist"] = m.beta_dist ? nlohmann::json(m.beta_dist->spec()) : nlohmann::json(nullptr);
  j["static_alpha"] = m.static_alpha;
  j["static_beta"] = m.static_beta;
  j["seed"] = m.seed;
  j["sla_ms"] = m.sla_ms;
  return j;
}

AgentMeta agent_meta_from_json(const nlohmann::json& j) {
  AgentMeta m;
  try {
    m.task = parse_task(j.at("task").get<std::string>());
    m.topology = j.value("topology", std::string());
    m.model = nn::model_config_from_json(j.at("model"));
    m.static_preference = j.at("static_preference").get<bool>();
    if (!j.at("alpha_dist").is_null()) m.alpha_dist = pref::PreferenceDistribution::parse(j["alpha_dist"].get<std::string>());
    if (!j.at("beta_dist").is_null()) m.beta_dist = pref::PreferenceDistribution::parse(j["beta_dist"].get<std::string>());
    m.static_alpha = j.value("static_alpha", 0.0);
    m.static_beta = j.value("static_beta", 0.0);
    m.seed = j.value("seed", std::uint64_t{0});
    m.sla_ms = j.value("sla_ms", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("agent metadata: ") + e.what());
  }
  return m;
}

nn::Checkpoint Agent::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.metadata = to_json(meta_);
  ck.tensors = net_.named_parameters();
  return ck;
}

Agent Agent::from_checkpoint(const nn::Checkpoint& checkpoint) {
  AgentMeta meta = agent_meta_from_json(checkpoint.metadata);
  nn::PolicyValueNet net(meta.model, checkpoint.tensors);
  return Agent(std::move(meta), std::move(net));
}

void Agent::save(const std::filesystem::path& path) const { nn::save_checkpoint(path, to_checkpoint()); }

Agent Agent::load(const std::filesystem::path& path) { return from_checkpoint(nn::load_checkpoint(path)); }

}  // namespace prefnet::rl
