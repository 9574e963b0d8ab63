#include "prefnet/serve/session.hpp"

#include <chrono>
#include <cmath>

#include "prefnet/core/errors.hpp"
#include "prefnet/datagen/datagen.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::serve {

const char* control_kind_name(ControlKind kind) {
  switch (kind) {
    case ControlKind::kSetPreference: return "set_preference";
    case ControlKind::kNodeDown: return "node_down";
    case ControlKind::kNodeUp: return "node_up";
    case ControlKind::kPause: return "pause";
    case ControlKind::kResume: return "resume";
    case ControlKind::kReset: return "reset";
  }
  return "?";
}

namespace {

ControlKind parse_kind(const std::string& s) {
  if (s == "set_preference") return ControlKind::kSetPreference;
  if (s == "node_down") return ControlKind::kNodeDown;
  if (s == "node_up") return ControlKind::kNodeUp;
  if (s == "pause") return ControlKind::kPause;
  if (s == "resume") return ControlKind::kResume;
  if (s == "reset") return ControlKind::kReset;
  throw FormatError("kind: unknown control '" + s + "'");
}

std::optional<double> preference_field(const nlohmann::json& payload, const char* name) {
  if (!payload.contains(name)) return std::nullopt;
  const auto& v = payload[name];
  if (!v.is_number()) throw FormatError(std::string("payload.") + name + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || x < 0.0) throw FormatError(std::string("payload.") + name + ": must be finite and >= 0");
  return x;
}

}  // namespace

ControlMessage parse_control(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("control message must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw FormatError("kind: missing or not a string");
  ControlMessage m;
  m.kind = parse_kind(j["kind"].get<std::string>());
  if (j.contains("id")) m.id = j["id"];
  const nlohmann::json payload = j.value("payload", nlohmann::json::object());
  if (!payload.is_object()) throw FormatError("payload: expected an object");
  switch (m.kind) {
    case ControlKind::kSetPreference:
      m.alpha = preference_field(payload, "alpha");
      m.beta = preference_field(payload, "beta");
      if (!m.alpha && !m.beta) throw FormatError("payload: set_preference needs alpha and/or beta");
      break;
    case ControlKind::kNodeDown:
    case ControlKind::kNodeUp:
      if (!payload.contains("node") || !payload["node"].is_number_integer()) {
        throw FormatError("payload.node: missing or not an integer");
      }
      m.node = payload["node"].get<int>();
      break;
    default:
      break;
  }
  return m;
}

Session::Session(std::string id, rl::Agent agent, sim::Topology topology,
                 std::vector<datagen::DatasetRecord> records, SessionOptions options)
    : id_(std::move(id)),
      agent_(std::move(agent)),
      topology_(std::move(topology)),
      records_(std::move(records)),
      options_(std::move(options)) {
  if (records_.empty()) throw ContractViolation("session: empty dataset slice");
  if (agent_.meta().task != options_.env.task) throw ContractViolation("session: checkpoint task does not match");
  if (agent_.net().config().pref_dims != rl::preference_dims(options_.env.task)) {
    throw ContractViolation("session: incompatible checkpoint");
  }
  for (const auto& r : records_) {
    if (r.deployment.num_nodes() != topology_.num_nodes()) {
      throw ContractViolation("session: dataset does not match the topology");
    }
  }
  preference_ = options_.preference;
  if (options_.env.task == rl::Task::kPowerManagement && !preference_.beta) {
    preference_.beta = agent_.nominal_preference().beta;
  }
  status_.assign(topology_.num_nodes(), sim::NodeStatus::kUp);
  rebuild();
}

void Session::rebuild() {
  stepper_ = std::make_unique<eval::Stepper>(agent_, topology_, records_, options_.env, preference_, true);
  for (std::size_t n = 0; n < status_.size(); ++n) {
    if (status_[n] == sim::NodeStatus::kDown) stepper_->set_node_status(static_cast<int>(n), status_[n]);
  }
}

nlohmann::json Session::ack(const ControlMessage& m, bool ok, const std::string& error) const {
  nlohmann::json j{{"version", kProtocolVersion}, {"type", "ack"}, {"session", id_},
                   {"kind", control_kind_name(m.kind)}, {"ok", ok}, {"tick", tick_}};
  if (!m.id.is_null()) j["id"] = m.id;
  if (!ok) j["error"] = error;
  return j;
}

nlohmann::json Session::submit(const nlohmann::json& message) {
  try {
    return submit(parse_control(message));
  } catch (const FormatError& e) {
    std::lock_guard lock(mutex_);
    nlohmann::json j{{"version", kProtocolVersion}, {"type", "ack"}, {"session", id_},
                     {"ok", false},     {"tick", tick_},  {"error", e.what()}};
    if (message.is_object() && message.contains("id")) j["id"] = message["id"];
    if (message.is_object() && message.contains("kind")) j["kind"] = message["kind"];
    return j;
  }
}

nlohmann::json Session::submit(const ControlMessage& message) {
  std::lock_guard lock(mutex_);
  if (terminated_) return ack(message, false, "session terminated");
  if ((message.kind == ControlKind::kNodeDown || message.kind == ControlKind::kNodeUp) &&
      !topology_.contains(message.node)) {
    return ack(message, false, "unknown node " + std::to_string(message.node));
  }
  if (message.kind == ControlKind::kSetPreference && message.beta &&
      options_.env.task != rl::Task::kPowerManagement) {
    return ack(message, false, "beta applies to the power-management task only");
  }
  pending_.push_back(message);
  return ack(message, true, {});
}

void Session::apply(const ControlMessage& m) {
  switch (m.kind) {
    case ControlKind::kSetPreference:
      if (m.alpha) {
        preference_.alpha = *m.alpha;
        stepper_->set_alpha(*m.alpha);
      }
      if (m.beta) {
        preference_.beta = *m.beta;
        stepper_->set_beta(*m.beta);
      }
      break;
    case ControlKind::kNodeDown:
    case ControlKind::kNodeUp: {
      const auto s = m.kind == ControlKind::kNodeDown ? sim::NodeStatus::kDown : sim::NodeStatus::kUp;
      status_[m.node] = s;
      stepper_->set_node_status(m.node, s);
      break;
    }
    case ControlKind::kPause: running_ = false; break;
    case ControlKind::kResume: running_ = true; break;
    case ControlKind::kReset:
      std::fill(status_.begin(), status_.end(), sim::NodeStatus::kUp);
      rebuild();
      break;
  }
}

nlohmann::json Session::telemetry(const rl::StepOutcome& out) const {
  const auto& env = stepper_->env();
  nlohmann::json per_node = nlohmann::json::array();
  for (std::size_t n = 0; n < topology_.num_nodes(); ++n) {
    const int id = static_cast<int>(n);
    nlohmann::json counts = nlohmann::json::array();
    for (auto f : sim::kAllVnfTypes) counts.push_back(env.deployment().count(id, f));
    per_node.push_back({{"id", id},
                        {"status", env.topology().is_up(id) ? "up" : "down"},
                        {"instance_counts", std::move(counts)},
                        {"power", out.node_watts.empty() ? 0.0 : out.node_watts[n]}});
  }
  nlohmann::json j{{"version", kProtocolVersion},
                   {"type", "telemetry"},
                   {"session", id_},
                   {"tick", tick_},
                   {"alpha", preference_.alpha},
                   {"slav", out.paths ? static_cast<double>(out.violations) / static_cast<double>(out.paths) : 0.0},
                   {"vnf_total", out.vnf_total},
                   {"power_total", out.power_watts},
                   {"reward", out.reward},
                   {"per_node", std::move(per_node)}};
  if (preference_.beta) j["beta"] = *preference_.beta;
  return j;
}

std::optional<nlohmann::json> Session::tick() {
  std::lock_guard lock(mutex_);
  if (terminated_) return std::nullopt;
  try {
    while (!pending_.empty()) {
      apply(pending_.front());
      pending_.pop_front();
    }
    if (!running_) return std::nullopt;
    const auto out = stepper_->step();
    ++tick_;
    return telemetry(out);
  } catch (const std::exception& e) {
    terminated_ = true;
    running_ = false;
    return nlohmann::json{{"version", kProtocolVersion}, {"type", "terminal"}, {"session", id_},
                          {"tick", tick_},               {"reason", e.what()}};
  }
}

bool Session::running() const {
  std::lock_guard lock(mutex_);
  return running_;
}

bool Session::terminated() const {
  std::lock_guard lock(mutex_);
  return terminated_;
}

std::int64_t Session::current_tick() const {
  std::lock_guard lock(mutex_);
  return tick_;
}

nlohmann::json Session::state() const {
  std::lock_guard lock(mutex_);
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t n = 0; n < status_.size(); ++n) {
    nodes.push_back({{"id", n}, {"status", status_[n] == sim::NodeStatus::kUp ? "up" : "down"}});
  }
  nlohmann::json j{{"version", kProtocolVersion},
                   {"id", id_},
                   {"checkpoint", options_.checkpoint},
                   {"task", rl::task_name(options_.env.task)},
                   {"tick", tick_},
                   {"running", running_},
                   {"terminated", terminated_},
                   {"tick_ms", options_.tick_ms},
                   {"alpha", preference_.alpha},
                   {"pending_controls", pending_.size()},
                   {"nodes", std::move(nodes)}};
  if (preference_.beta) j["beta"] = *preference_.beta;
  return j;
}

SessionManager::SessionManager(FrameSink sink) : sink_(std::move(sink)) {}

SessionManager::~SessionManager() { stop_all(); }

std::string SessionManager::next_id() {
  std::lock_guard lock(mutex_);
  return "s" + std::to_string(++counter_);
}

std::shared_ptr<Session> SessionManager::create(const nlohmann::json& request, bool start_loop) {
  std::string checkpoint, topology_path, dataset_dir, split = "test";
  std::size_t start = 0, length = 0;
  SessionOptions options;
  std::optional<double> alpha, beta;
  try {
    checkpoint = request.at("checkpoint").get<std::string>();
    topology_path = request.at("topology").get<std::string>();
    dataset_dir = request.at("dataset").get<std::string>();
    split = request.value("split", split);
    start = request.value("start", std::size_t{0});
    length = request.value("length", std::size_t{0});
    options.tick_ms = request.value("tick_ms", 500u);
    if (request.contains("alpha")) alpha = request["alpha"].get<double>();
    if (request.contains("beta")) beta = request["beta"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("session request: ") + e.what());
  }
  auto agent = rl::Agent::load(checkpoint);
  auto topology = sim::Topology::load(topology_path);
  auto ds = datagen::load_dataset(dataset_dir, topology.num_nodes());
  const std::vector<datagen::DatasetRecord>* records = nullptr;
  if (split == "train") records = &ds.splits.train;
  else if (split == "val") records = &ds.splits.val;
  else if (split == "test") records = &ds.splits.test;
  else throw FormatError("split: expected train|val|test");
  if (start >= records->size()) throw ContractViolation("start: beyond the end of the split");
  const std::size_t end = length ? std::min(records->size(), start + length) : records->size();
  std::vector<datagen::DatasetRecord> slice(records->begin() + static_cast<std::ptrdiff_t>(start),
                                            records->begin() + static_cast<std::ptrdiff_t>(end));

  options.checkpoint = checkpoint;
  options.env.task = agent.meta().task;
  options.env.sla_ms = ds.meta.sla_ms;
  options.preference = agent.nominal_preference();
  if (alpha) options.preference.alpha = *alpha;
  if (beta) options.preference.beta = *beta;
  if (!(options.preference.alpha >= 0.0) || (options.preference.beta && !(*options.preference.beta >= 0.0))) {
    throw ContractViolation("preference must be >= 0");
  }
  return add(std::make_unique<Session>(next_id(), std::move(agent), std::move(topology), std::move(slice), options),
             start_loop);
}

std::shared_ptr<Session> SessionManager::add(std::unique_ptr<Session> session, bool start_loop) {
  std::shared_ptr<Session> shared(std::move(session));
  Loop loop;
  loop.session = shared;
  loop.stop = std::make_shared<std::atomic<bool>>(false);
  if (start_loop) {
    loop.thread = std::thread([shared, stop = loop.stop, sink = sink_] {
      using clock = std::chrono::steady_clock;
      auto next = clock::now();
      while (!stop->load()) {
        next += std::chrono::milliseconds(std::max(1u, shared->tick_ms()));
        while (!stop->load() && clock::now() < next) {
          std::this_thread::sleep_for(std::min<clock::duration>(std::chrono::milliseconds(10), next - clock::now()));
        }
        if (stop->load()) break;
        if (auto frame = shared->tick(); frame && sink) sink(shared->id(), *frame);
        if (shared->terminated()) break;
      }
    });
  }
  std::lock_guard lock(mutex_);
  sessions_.emplace(shared->id(), std::move(loop));
  return shared;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second.session;
}

bool SessionManager::remove(const std::string& id) {
  Loop loop;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    loop = std::move(it->second);
    sessions_.erase(it);
  }
  loop.stop->store(true);
  if (loop.thread.joinable()) loop.thread.join();
  return true;
}

void SessionManager::stop_all() {
  std::vector<std::string> ids;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, loop] : sessions_) ids.push_back(id);
  }
  for (const auto& id : ids) remove(id);
}

}  // namespace prefnet::serve
