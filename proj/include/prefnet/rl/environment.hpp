#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "prefnet/datagen/record.hpp"
#include "prefnet/encoding/encoding.hpp"
#include "prefnet/sim/power.hpp"
#include "prefnet/sim/routing.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::rl {

enum class Task { kAutoScaling, kPowerManagement };

const char* task_name(Task task);
Task parse_task(std::string_view text);
inline std::size_t preference_dims(Task task) { return task == Task::kPowerManagement ? 2 : 1; }

struct Preference {
  double alpha = 0.0;
  std::optional<double> beta;  // present iff power management
};

struct EnvConfig {
  Task task = Task::kAutoScaling;
  double sla_ms = 1.0;
  sim::PowerModel power;
  std::size_t episode_length = 32;
  bool action_mask = false;
  double unroutable_penalty = 2.0;  // an unroutable request counts as this many SLAs
  // Refuse a scale-in that would remove the network's last instance of a type.
  bool keep_last_instance = true;
};

struct StepOutcome {
  double reward = 0.0;
  std::size_t paths = 0;       // active requests routed (or attempted)
  std::size_t violations = 0;  // ζ > ζ_SLA, unroutable included
  int vnf_total = 0;
  double power_watts = 0.0;
  double power_norm = 0.0;  // Σ W(n) / p_max, the reward's power term
  std::vector<sim::SfcPath> routed;  // empty path for an unroutable request
  std::vector<double> delays;
  std::vector<double> node_watts;
};

// Episodic auto-scaling environment over a window of dataset records. The
// deployment carries over between steps; each step serves the next record's
// requests.
class ScalingEnv {
 public:
  ScalingEnv(sim::Topology topology, std::span<const datagen::DatasetRecord> records, EnvConfig config);
  ScalingEnv(const ScalingEnv& other);
  ScalingEnv& operator=(const ScalingEnv&) = delete;

  const EnvConfig& config() const { return config_; }
  const sim::Topology& topology() const { return topology_; }
  const sim::Deployment& deployment() const { return deployment_; }
  std::size_t num_records() const { return records_.size(); }
  std::size_t record_index() const { return cursor_; }
  std::size_t steps_in_episode() const { return steps_; }

  // Starts an episode at records[index] with that record's initial deployment.
  void reset(std::size_t index);
  void reset(std::size_t index, const sim::Deployment& deployment);
  bool done() const;

  // Requests of the current record whose endpoints are up.
  std::vector<sim::ServiceRequest> active_requests() const;
  std::shared_ptr<const Matrix> adjacency() const { return adjacency_; }
  // nullopt when no request is active (caller should keep).
  std::optional<encoding::SurrogateState> observe(std::span<const encoding::PreferenceInput> preference) const;

  StepOutcome step(const sim::ActionMatrix& action, const Preference& preference);
  // Evaluates the current deployment against the current record without acting.
  StepOutcome measure(const Preference& preference);

  void set_node_status(sim::NodeId node, sim::NodeStatus status);

 private:
  StepOutcome evaluate(const Preference& preference);

  sim::Topology topology_;
  std::span<const datagen::DatasetRecord> records_;
  EnvConfig config_;
  sim::Router router_;
  std::shared_ptr<const Matrix> adjacency_;
  sim::Deployment deployment_;
  std::size_t cursor_ = 0;
  std::size_t steps_ = 0;
};

}  // namespace prefnet::rl
