#include "prefnet/datagen/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prefnet/core/errors.hpp"
#include "prefnet/sim/deployment.hpp"
#include "prefnet/sim/routing.hpp"

namespace prefnet::datagen {

namespace {

constexpr std::uint64_t kTrafficStream = 10;
constexpr std::uint64_t kRequestStream = 11;
constexpr std::uint64_t kDeploymentStream = 12;

}  // namespace

double TrafficPattern::total(std::size_t t) const {
  double s = 0.0;
  for (double v : intensity.at(t)) s += v;
  return s;
}

TrafficPattern synth_traffic(std::uint64_t seed, const sim::Topology& topology, std::size_t horizon,
                             const TrafficConfig& config) {
  if (horizon < 1) throw ContractViolation("synth_traffic: horizon must be >= 1");
  if (!(config.period > 0.0) || config.amplitude < 0.0 || config.noise_sigma < 0.0 || config.mean_flows < 0.0) {
    throw ConfigError("synth_traffic: invalid traffic config");
  }
  const std::size_t n = topology.num_nodes();
  Rng rng = make_rng(seed, kTrafficStream);
  std::uniform_real_distribution<double> weight_dist(0.5, 1.5);
  std::uniform_real_distribution<double> jitter_dist(-std::numbers::pi / 6.0, std::numbers::pi / 6.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const double phase = 2.0 * std::numbers::pi * uniform01(rng);
  std::vector<double> weight(n * n, 0.0), jitter(n * n, 0.0);
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      weight[i * n + j] = weight_dist(rng);
      jitter[i * n + j] = jitter_dist(rng);
      weight_sum += weight[i * n + j];
    }
  }
  const double scale = weight_sum > 0.0 ? config.mean_flows / weight_sum : 0.0;
  const double sigma = config.noise_sigma;

  TrafficPattern pattern;
  pattern.num_nodes = n;
  pattern.intensity.assign(horizon, std::vector<double>(n * n, 0.0));
  for (std::size_t t = 0; t < horizon; ++t) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) / config.period + phase;
    for (std::size_t k = 0; k < n * n; ++k) {
      if (weight[k] == 0.0) continue;
      const double diurnal = 1.0 + config.amplitude * std::sin(angle + jitter[k]);
      const double lognormal = std::exp(sigma * noise(rng) - 0.5 * sigma * sigma);
      pattern.intensity[t][k] = std::max(0.0, scale * weight[k] * diurnal * lognormal);
    }
  }
  return pattern;
}

TrafficPattern load_trace(const std::filesystem::path& path, std::size_t num_nodes) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open trace " + path.string());
  TrafficPattern pattern;
  pattern.num_nodes = num_nodes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::vector<double> row;
    double v;
    while (fields >> v) row.push_back(v);
    if (!fields.eof()) throw FormatError("trace line " + std::to_string(lineno) + ": non-numeric field");
    if (row.size() != num_nodes * num_nodes) {
      throw FormatError("trace line " + std::to_string(lineno) + ": expected " +
                        std::to_string(num_nodes * num_nodes) + " values, got " + std::to_string(row.size()));
    }
    for (std::size_t i = 0; i < num_nodes; ++i) {
      for (std::size_t j = 0; j < num_nodes; ++j) {
        double& x = row[i * num_nodes + j];
        if (!(x >= 0.0) || !std::isfinite(x)) throw FormatError("trace line " + std::to_string(lineno) + ": negative value");
        if (i == j) x = 0.0;
      }
    }
    pattern.intensity.push_back(std::move(row));
  }
  if (pattern.intensity.empty()) throw FormatError("trace " + path.string() + " has no timesteps");
  return pattern;
}

std::vector<DatasetRecord> gen_requests(const TrafficPattern& pattern, const sim::Topology& topology,
                                        const sim::VnfCatalog&, std::uint64_t seed, const RequestConfig& config) {
  if (pattern.num_nodes != topology.num_nodes()) throw ContractViolation("gen_requests: pattern/topology size mismatch");
  if (!(config.bw_low > 0.0) || config.bw_high < config.bw_low) throw ConfigError("gen_requests: invalid bandwidth range");
  const auto up = topology.up_nodes();
  if (up.size() < 2) throw ContractViolation("gen_requests: fewer than two up nodes");

  Rng rng = make_rng(seed, kRequestStream);
  std::vector<DatasetRecord> records;
  for (std::size_t t = 0; t < pattern.horizon(); ++t) {
    const double expected = pattern.total(t) * config.flows_per_unit;
    auto flows = static_cast<std::size_t>(std::floor(expected + uniform01(rng)));
    if (flows == 0) {
      if (!config.min_one_flow) continue;
      flows = 1;
    }
    DatasetRecord record;
    record.t = static_cast<std::int64_t>(t);
    record.deployment = sim::Deployment(topology.num_nodes());
    for (std::size_t k = 0; k < flows; ++k) {
      sim::ServiceRequest r;
      const std::size_t a = rng() % up.size();
      std::size_t b = rng() % (up.size() - 1);
      if (b >= a) ++b;
      r.src = up[a];
      r.dst = up[b];
      r.bandwidth = config.bw_low + (config.bw_high - config.bw_low) * uniform01(rng);
      r.service_type = sim::service_from_index(static_cast<int>(rng() % sim::kNumServiceTypes));
      record.requests.push_back(r);
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<double> betweenness(const sim::Topology& topology) {
  // Brandes' algorithm with Dijkstra for weighted graphs.
  const std::size_t n = topology.num_nodes();
  std::vector<double> cb(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    if (!topology.is_up(static_cast<int>(s))) continue;
    std::vector<double> dist(n, sim::kUnreachable), sigma(n, 0.0), delta(n, 0.0);
    std::vector<std::vector<int>> preds(n);
    std::vector<int> order;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[s] = 0.0;
    sigma[s] = 1.0;
    pq.emplace(0.0, static_cast<int>(s));
    std::vector<bool> settled(n, false);
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (settled[v]) continue;
      settled[v] = true;
      order.push_back(v);
      for (const auto& [w, e] : topology.neighbors(v)) {
        if (!topology.is_up(w)) continue;
        const double nd = d + e;
        if (nd < dist[w]) {
          dist[w] = nd;
          sigma[w] = sigma[v];
          preds[w] = {v};
          pq.emplace(nd, w);
        } else if (nd == dist[w]) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int w = *it;
      for (int v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (static_cast<std::size_t>(w) != s) cb[w] += delta[w];
    }
  }
  return cb;
}

namespace {

std::vector<sim::NodeId> central_order(const sim::Topology& topology) {
  const auto cb = betweenness(topology);
  auto order = topology.up_nodes();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cb[a] > cb[b]; });
  return order;
}

std::array<double, sim::kNumVnfTypes> type_demand(std::span<const sim::ServiceRequest> requests) {
  std::array<double, sim::kNumVnfTypes> demand{};
  for (const auto& r : requests) {
    std::array<bool, sim::kNumVnfTypes> seen{};
    for (auto f : r.chain()) {
      const auto k = static_cast<std::size_t>(f);
      if (!seen[k]) demand[k] += r.bandwidth;
      seen[k] = true;
    }
  }
  return demand;
}

sim::Deployment place(const std::vector<sim::NodeId>& order, std::size_t num_nodes,
                      std::span<const sim::ServiceRequest> requests, const sim::VnfCatalog& catalog) {
  sim::Deployment d(num_nodes);
  if (order.empty()) return d;
  const auto demand = type_demand(requests);
  for (auto f : sim::kAllVnfTypes) {
    const double need = demand[static_cast<std::size_t>(f)];
    if (need <= 0.0) continue;
    const auto instances = static_cast<std::size_t>(std::ceil(need / catalog.capacity(f)));
    for (std::size_t k = 0; k < instances; ++k) {
      const auto node = order[k % order.size()];
      d.set_count(node, f, d.count(node, f) + 1);
    }
  }
  return d;
}

}  // namespace

sim::Deployment greedy_deployment(const sim::Topology& topology, std::span<const sim::ServiceRequest> requests,
                                  const sim::VnfCatalog& catalog) {
  return place(central_order(topology), topology.num_nodes(), requests, catalog);
}

sim::Deployment init_deployment(const sim::Topology& topology, std::span<const sim::ServiceRequest> requests,
                                const sim::VnfCatalog& catalog, Rng& rng, const DeploymentConfig& config) {
  if (config.perturb_fraction < 0.0 || config.perturb_fraction > 1.0) throw ConfigError("perturb_fraction must be in [0,1]");
  const auto order = central_order(topology);
  sim::Deployment d = place(order, topology.num_nodes(), requests, catalog);
  if (requests.empty()) return d;
  for (std::size_t n = 0; n < topology.num_nodes(); ++n) {
    for (auto f : sim::kAllVnfTypes) {
      const double u = uniform01(rng);
      const double sign = uniform01(rng);
      if (u >= config.perturb_fraction) continue;
      const int node = static_cast<int>(n);
      if (!topology.is_up(node)) continue;
      d.set_count(node, f, std::max(0, d.count(node, f) + (sign < 0.5 ? -1 : 1)));
    }
  }
  // Feasibility guard: a requested type must survive the perturbation.
  const auto demand = type_demand(requests);
  for (auto f : sim::kAllVnfTypes) {
    if (demand[static_cast<std::size_t>(f)] > 0.0 && d.type_total(f) == 0 && !order.empty()) {
      d.set_count(order.front(), f, 1);
    }
  }
  return d;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractViolation("percentile: no values");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("percentile: p must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> record_delays(const sim::Topology& topology, std::span<const DatasetRecord> records) {
  sim::Router router(topology);
  std::vector<double> delays;
  for (const auto& record : records) {
    for (const auto& request : record.requests) {
      delays.push_back(sim::path_delay(topology, router.route(record.deployment, request)));
    }
  }
  return delays;
}

double calibrate_sla(const sim::Topology& topology, std::span<const DatasetRecord> records) {
  auto delays = record_delays(topology, records);
  if (delays.size() < 20) {
    throw ContractViolation("calibrate_sla: need >= 20 routed paths, got " + std::to_string(delays.size()));
  }
  return percentile(std::move(delays), 0.95);
}

Split split(std::span<const DatasetRecord> records) {
  if (records.size() < 10) throw ContractViolation("split: need >= 10 records");
  const std::size_t tenth = records.size() / 10;
  const std::size_t train = records.size() - 2 * tenth;
  Split s;
  s.train.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(train));
  s.val.assign(records.begin() + static_cast<std::ptrdiff_t>(train),
               records.begin() + static_cast<std::ptrdiff_t>(train + tenth));
  s.test.assign(records.begin() + static_cast<std::ptrdiff_t>(train + tenth), records.end());
  return s;
}

Dataset generate_from(const sim::Topology& topology, const TrafficPattern& pattern, std::uint64_t seed,
                      const GenConfig& config) {
  auto records = gen_requests(pattern, topology, config.catalog, seed, config.requests);
  Rng rng = make_rng(seed, kDeploymentStream);
  for (auto& record : records) {
    record.deployment = init_deployment(topology, record.requests, config.catalog, rng, config.deployment);
  }
  const double sla = calibrate_sla(topology, records);
  for (auto& record : records) {
    for (auto& r : record.requests) r.sla_ms = sla;
  }
  Dataset ds;
  ds.meta.topology = topology.name();
  ds.meta.sla_ms = sla;
  ds.meta.seed = seed;
  ds.meta.horizon = pattern.horizon();
  ds.splits = split(records);
  ds.meta.train = ds.splits.train.size();
  ds.meta.val = ds.splits.val.size();
  ds.meta.test = ds.splits.test.size();
  return ds;
}

Dataset generate(const sim::Topology& topology, std::uint64_t seed, const GenConfig& config) {
  return generate_from(topology, synth_traffic(seed, topology, config.horizon, config.traffic), seed, config);
}

nlohmann::json to_json(const DatasetRecord& record) {
  nlohmann::json requests = nlohmann::json::array();
  for (const auto& r : record.requests) {
    requests.push_back({{"src", r.src}, {"dst", r.dst}, {"bw", r.bandwidth}, {"type", static_cast<int>(r.service_type)}});
  }
  nlohmann::json deployment = nlohmann::json::array();
  for (std::size_t n = 0; n < record.deployment.num_nodes(); ++n) {
    nlohmann::json row = nlohmann::json::array();
    for (auto f : sim::kAllVnfTypes) row.push_back(record.deployment.count(static_cast<int>(n), f));
    deployment.push_back(std::move(row));
  }
  return {{"t", record.t}, {"requests", std::move(requests)}, {"deployment", std::move(deployment)}};
}

DatasetRecord record_from_json(const nlohmann::json& j, std::size_t num_nodes) {
  try {
    DatasetRecord record;
    record.t = j.at("t").get<std::int64_t>();
    for (const auto& r : j.at("requests")) {
      sim::ServiceRequest req;
      req.src = r.at("src").get<int>();
      req.dst = r.at("dst").get<int>();
      req.bandwidth = r.at("bw").get<double>();
      req.service_type = sim::service_from_index(r.at("type").get<int>());
      record.requests.push_back(req);
    }
    if (record.requests.empty()) throw FormatError("record has no requests");
    const auto& rows = j.at("deployment");
    if (rows.size() != num_nodes) throw FormatError("deployment has " + std::to_string(rows.size()) + " rows");
    record.deployment = sim::Deployment(num_nodes);
    for (std::size_t n = 0; n < num_nodes; ++n) {
      if (rows[n].size() != sim::kNumVnfTypes) throw FormatError("deployment row width must be 5");
      for (auto f : sim::kAllVnfTypes) {
        const int c = rows[n][static_cast<std::size_t>(f)].get<int>();
        if (c < 0) throw FormatError("negative instance count");
        record.deployment.set_count(static_cast<int>(n), f, c);
      }
    }
    return record;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset record: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("dataset record: ") + e.what());
  }
}

nlohmann::json to_json(const DatasetMeta& meta) {
  return {{"topology", meta.topology},
          {"sla_ms", meta.sla_ms},
          {"counts", {{"train", meta.train}, {"val", meta.val}, {"test", meta.test}}},
          {"seed", meta.seed},
          {"horizon", meta.horizon}};
}

DatasetMeta meta_from_json(const nlohmann::json& j) {
  try {
    DatasetMeta m;
    m.topology = j.at("topology").get<std::string>();
    m.sla_ms = j.at("sla_ms").get<double>();
    m.train = j.at("counts").at("train").get<std::size_t>();
    m.val = j.at("counts").at("val").get<std::size_t>();
    m.test = j.at("counts").at("test").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.horizon = j.value("horizon", std::size_t{0});
    if (!(m.sla_ms > 0.0)) throw FormatError("dataset meta: sla_ms must be > 0");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset meta: ") + e.what());
  }
}

void write_records(const std::filesystem::path& path, std::span<const DatasetRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<DatasetRecord> read_records(const std::filesystem::path& path, std::size_t num_nodes, double sla_ms) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<DatasetRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    auto record = record_from_json(j, num_nodes);
    for (auto& r : record.requests) r.sla_ms = sla_ms;
    records.push_back(std::move(record));
  }
  return records;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "meta.json", std::ios::binary);
    if (!out) throw FormatError("cannot write " + (dir / "meta.json").string());
    out << to_json(dataset.meta).dump(2) << '\n';
  }
  write_records(dir / "train.ndjson", dataset.splits.train);
  write_records(dir / "val.ndjson", dataset.splits.val);
  write_records(dir / "test.ndjson", dataset.splits.test);
}

Dataset load_dataset(const std::filesystem::path& dir, std::size_t num_nodes) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw FormatError("cannot open " + (dir / "meta.json").string());
  Dataset ds;
  try {
    ds.meta = meta_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("dataset meta: ") + e.what());
  }
  ds.splits.train = read_records(dir / "train.ndjson", num_nodes, ds.meta.sla_ms);
  ds.splits.val = read_records(dir / "val.ndjson", num_nodes, ds.meta.sla_ms);
  ds.splits.test = read_records(dir / "test.ndjson", num_nodes, ds.meta.sla_ms);
  if (ds.splits.train.size() != ds.meta.train || ds.splits.val.size() != ds.meta.val ||
      ds.splits.test.size() != ds.meta.test) {
    throw FormatError("dataset split sizes disagree with meta.json");
  }
  return ds;
}

}  // namespace prefnet::datagen
