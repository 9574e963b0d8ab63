#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prefnet/core/rng.hpp"
#include "prefnet/datagen/record.hpp"
#include "prefnet/sim/catalog.hpp"
#include "prefnet/sim/topology.hpp"

namespace prefnet::datagen {

// intensity[t][src * n + dst], diagonal always 0.
struct TrafficPattern {
  std::size_t num_nodes = 0;
  std::vector<std::vector<double>> intensity;

  std::size_t horizon() const { return intensity.size(); }
  double total(std::size_t t) const;
};

struct TrafficConfig {
  double period = 24.0;
  double amplitude = 0.6;     // relative swing of the diurnal sinusoid
  double noise_sigma = 0.3;   // lognormal noise scale
  double mean_flows = 6.0;    // expected requests per timestep at the sinusoid midline
};

TrafficPattern synth_traffic(std::uint64_t seed, const sim::Topology& topology, std::size_t horizon,
                             const TrafficConfig& config = {});

// Plain-text origin-destination trace: one timestep per line, n*n
// whitespace-separated non-negative values (row-major). Blank lines and lines
// starting with '#' are skipped.
TrafficPattern load_trace(const std::filesystem::path& path, std::size_t num_nodes);

struct RequestConfig {
  double bw_low = 10.0;
  double bw_high = 100.0;
  // Expected flows per unit of total intensity.
  double flows_per_unit = 1.0;
  // Zero-flow timesteps are skipped; with this set they get one flow instead.
  bool min_one_flow = false;
};

// One request set per timestep with at least one flow.
std::vector<DatasetRecord> gen_requests(const TrafficPattern& pattern, const sim::Topology& topology,
                                        const sim::VnfCatalog& catalog, std::uint64_t seed,
                                        const RequestConfig& config = {});

// Shortest-path betweenness (delay-weighted) over the up nodes.
std::vector<double> betweenness(const sim::Topology& topology);

struct DeploymentConfig {
  double perturb_fraction = 0.3;
};

// Greedy placement at central nodes sized to the demand.
sim::Deployment greedy_deployment(const sim::Topology& topology, std::span<const sim::ServiceRequest> requests,
                                  const sim::VnfCatalog& catalog);
sim::Deployment init_deployment(const sim::Topology& topology, std::span<const sim::ServiceRequest> requests,
                                const sim::VnfCatalog& catalog, Rng& rng, const DeploymentConfig& config = {});

// 95th percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double p);

// Delays of every request routed on its record's initial deployment.
std::vector<double> record_delays(const sim::Topology& topology, std::span<const DatasetRecord> records);
double calibrate_sla(const sim::Topology& topology, std::span<const DatasetRecord> records);

struct Split {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> val;
  std::vector<DatasetRecord> test;
};

// Contiguous-time 8:1:1 split: floor(N/10) each for val and test.
Split split(std::span<const DatasetRecord> records);

struct DatasetMeta {
  std::string topology;
  double sla_ms = 0.0;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
};

struct GenConfig {
  std::size_t horizon = 480;
  TrafficConfig traffic;
  RequestConfig requests;
  DeploymentConfig deployment;
  sim::VnfCatalog catalog;
};

struct Dataset {
  DatasetMeta meta;
  Split splits;
};

// Full pipeline: traffic -> requests -> deployments -> SLA -> split.
Dataset generate(const sim::Topology& topology, std::uint64_t seed, const GenConfig& config = {});
// Same from an externally supplied traffic pattern.
Dataset generate_from(const sim::Topology& topology, const TrafficPattern& pattern, std::uint64_t seed,
                      const GenConfig& config = {});

nlohmann::json to_json(const DatasetRecord& record);
DatasetRecord record_from_json(const nlohmann::json& j, std::size_t num_nodes);
nlohmann::json to_json(const DatasetMeta& meta);
DatasetMeta meta_from_json(const nlohmann::json& j);

void write_records(const std::filesystem::path& path, std::span<const DatasetRecord> records);
std::vector<DatasetRecord> read_records(const std::filesystem::path& path, std::size_t num_nodes, double sla_ms);

// dir/{meta.json,train.ndjson,val.ndjson,test.ndjson}
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir, std::size_t num_nodes);

}  // namespace prefnet::datagen
