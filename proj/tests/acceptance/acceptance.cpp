#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>

#include "prefnet/datagen/datagen.hpp"
#include "prefnet/eval/eval.hpp"
#include "prefnet/nn/model.hpp"
#include "prefnet/pref/distribution.hpp"
#include "prefnet/pref/fit.hpp"
#include "prefnet/rl/ppo.hpp"
#include "prefnet/rl/trainer.hpp"

using namespace prefnet;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kQuantileBudgetS = 1.0;
constexpr double kFitTolerance = 1e-3;
constexpr double kFitBudgetS = 10.0;
constexpr double kKsTolerance = 0.02;
constexpr double kKsBudgetS = 5.0;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudgetS = 60.0;
constexpr double kTrainBudgetS = 30.0 * 60.0;
constexpr double kParityTolerance = 0.5;
constexpr double kParityBudgetS = 2.0 * 3600.0;
constexpr double kBaselineVariation = 0.10;
constexpr double kViolationTarget = 0.05;
constexpr double kViolationTolerance = 0.01;

// Toy setup shared by the learning criteria.
constexpr double kToyLambda = 46.0;
constexpr std::uint64_t kDataSeed = 1;
constexpr std::uint64_t kTrainSeed = 7;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail, double secs) {
  if (!pass) ++failures;
  std::printf("criterion %d %s %s: %s (%.2f s)\n", id, pass ? "PASS" : "FAIL", name, detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

fs::path data_dir() { return fs::path(PREFNET_DATA_DIR); }

void quantiles() {
  const auto t0 = Clock::now();
  const auto d = pref::PreferenceDistribution::exponential(145.45);
  const double qs[] = {0.2, 0.4, 0.6, 0.8, 0.99};
  const double expect[] = {0.0015, 0.0035, 0.0063, 0.0111, 0.0317};
  bool ok = true;
  std::ostringstream got;
  for (int i = 0; i < 5; ++i) {
    const double r = std::round(d.quantile(qs[i]) * 1e4) / 1e4;
    ok &= std::abs(r - expect[i]) < 1e-12;
    got << (i ? "," : "") << fmt("%.4f", r);
  }
  const double secs = seconds_since(t0);
  report(1, "quantile reproduction", ok && secs < kQuantileBudgetS, "got " + got.str(), secs);
}

void fit_recovery() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (double lambda : {145.45, 241.05, 42.51})
    for (double v_max : {1.0, 14.0}) {
      std::vector<pref::EffectSample> s;
      for (int i = 0; i <= 5; ++i) s.push_back({0.01 * i, v_max * std::exp(-lambda * 0.01 * i)});
      worst = std::max(worst, std::abs(pref::fit_exponential(s).lambda - lambda) / lambda);
    }
  const double secs = seconds_since(t0);
  report(2, "fit recovery", worst < kFitTolerance && secs < kFitBudgetS, "max rel err " + fmt("%.2e", worst), secs);
}

void pushforward() {
  const auto t0 = Clock::now();
  std::vector<pref::EffectSample> s;
  for (int i = 0; i <= 5; ++i) s.push_back({0.01 * i, 14.0 * std::exp(-145.45 * 0.01 * i)});
  const auto fit = pref::fit_exponential(s);
  const double ks = pref::pushforward_ks(fit.lambda, fit.lambda, fit.v_max, 100000, 3);
  const double secs = seconds_since(t0);
  report(3, "pushforward uniformity", ks < kKsTolerance && secs < kKsBudgetS, "KS " + fmt("%.4f", ks), secs);
}

void gradients() {
  const auto t0 = Clock::now();
  std::vector<sim::Node> nodes;
  for (int i = 0; i < 5; ++i) nodes.push_back({i, 1000.0, sim::NodeStatus::kUp});
  const sim::Topology topo("toy5", std::move(nodes),
                           {{0, 1, 2.0}, {1, 2, 3.5}, {2, 3, 1.2}, {3, 4, 4.0}, {0, 3, 6.1}});
  sim::Deployment dep(5);
  dep.set_count(1, sim::VnfType::kNat, 2);
  dep.set_count(2, sim::VnfType::kFirewall, 1);
  dep.set_count(3, sim::VnfType::kIds, 1);
  dep.set_count(4, sim::VnfType::kWano, 3);
  dep.set_count(0, sim::VnfType::kProxy, 1);
  std::vector<sim::ServiceRequest> reqs{{0, 3, 20.0, sim::ServiceType::kNatFirewallIds, 1.0},
                                        {4, 1, 50.0, sim::ServiceType::kNatWano, 1.0}};
  rl::Transition t;
  t.state.adjacency = std::make_shared<const Matrix>(encoding::adjacency(topo));
  for (const auto& q : reqs) t.state.annotations.push_back(encoding::annotate(dep, q));
  t.state.preference = {0.7};

  nn::ModelConfig mc;
  mc.hidden = 16;
  nn::PolicyValueNet net(mc, 21);
  {
    nn::NoGradGuard guard;
    auto out = net.forward(t.state);
    Rng rng = make_rng(2);
    double lp = 0.0;
    for (std::size_t r = 0; r < out.log_probs.rows(); ++r) {
      t.classes.push_back(rng() % 3);
      lp += out.log_probs.at(r, t.classes.back());
    }
    t.log_prob = lp - 0.05;
  }
  rl::PpoConfig cfg;
  const double advantage = 0.8, ret = -1.3;
  auto loss = [&] {
    nn::NoGradGuard guard;
    return rl::ppo_loss(net, t, advantage, ret, cfg).total.item();
  };
  net.zero_grad();
  nn::backward(rl::ppo_loss(net, t, advantage, ret, cfg).total);

  std::map<std::string, std::pair<double, double>> groups;  // diff², scale²
  std::map<std::string, double> ana2;
  for (auto& [name, p] : net.named_parameters()) {
    std::string group;
    for (const auto& g : nn::PolicyValueNet::groups())
      if (name.rfind(g, 0) == 0) group = g;
    auto v = p.value();
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i], h = 1e-5;
      v[i] = keep + h;
      const double up = loss();
      v[i] = keep - h;
      const double down = loss();
      v[i] = keep;
      const double num = (up - down) / (2 * h);
      groups[group].first += (num - analytic[i]) * (num - analytic[i]);
      groups[group].second += num * num;
      ana2[group] += analytic[i] * analytic[i];
    }
  }
  double worst = 0.0;
  for (const auto& [g, acc] : groups) {
    const double scale = std::max(std::sqrt(acc.second), std::sqrt(ana2[g]));
    worst = std::max(worst, scale > 0.0 ? std::sqrt(acc.first) / scale : 0.0);
  }
  const double secs = seconds_since(t0);
  report(4, "gradient integrity", groups.size() == nn::PolicyValueNet::groups().size() && worst < kGradTolerance &&
                                      secs < kGradBudgetS,
         std::to_string(groups.size()) + " groups, max rel err " + fmt("%.2e", worst), secs);
}

struct ToySetup {
  sim::Topology topo = sim::Topology::load(data_dir() / "topologies" / "toy4.json");
  datagen::Dataset ds;
  rl::TrainConfig config;
  pref::PreferenceDistribution dist = pref::PreferenceDistribution::exponential(kToyLambda);

  ToySetup() {
    datagen::GenConfig g;
    g.horizon = 400;
    g.traffic.mean_flows = 4.0;
    ds = datagen::generate(topo, kDataSeed, g);
    config.env.sla_ms = ds.meta.sla_ms;
    config.env.episode_length = 32;
    config.model.hidden = 16;
    config.ppo.total_steps = 20000;
    config.ppo.update_interval = 512;
    config.ppo.learning_rate = 1e-3;
    config.ppo.gamma = 0.9;
    config.ppo.seed = kTrainSeed;
  }

  rl::TrainResult train(const rl::PreferenceSource& source) const {
    return rl::train(topo, ds.splits.train, ds.splits.val, source, config);
  }
  eval::MetricReport evaluate(const rl::Agent& agent, double alpha) const {
    return eval::eval_static(agent, topo, ds.splits.test, config.env, {alpha, std::nullopt});
  }
};

void tradeoff(const ToySetup& toy, const rl::Agent& dp, double train_secs) {
  const auto t0 = Clock::now();
  const double lo_a = toy.dist.quantile(0.2), hi_a = toy.dist.quantile(0.99);
  const auto lo = toy.evaluate(dp, lo_a), hi = toy.evaluate(dp, hi_a);
  const double secs = train_secs + seconds_since(t0);
  std::ostringstream d;
  d << "vnf " << fmt("%.2f", lo.mean_vnf) << " -> " << fmt("%.2f", hi.mean_vnf) << ", slav " << fmt("%.3f", lo.slav)
    << " -> " << fmt("%.3f", hi.slav);
  report(5, "directional trade-off", hi.mean_vnf < lo.mean_vnf && hi.slav >= lo.slav && secs <= kTrainBudgetS, d.str(),
         secs);
}

void parity(const ToySetup& toy, const rl::Agent& dp, const std::vector<double>& alphas,
            const std::vector<rl::Agent>& baselines, double secs_so_far) {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream d;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const auto own = toy.evaluate(dp, alphas[k]);
    std::vector<double> rewards{own.mean_reward};
    double base_vnf = 0.0;
    for (std::size_t j = 0; j < baselines.size(); ++j) {
      const auto r = toy.evaluate(baselines[j], alphas[k]);
      rewards.push_back(r.mean_reward);
      if (j == k) base_vnf = r.mean_vnf;
    }
    const auto z = eval::normalize_rewards(rewards);
    const double gap = z.z[0] - z.z[1 + k];
    ok &= gap >= -kParityTolerance;
    d << (k ? ", " : "") << "a=" << fmt("%.4f", alphas[k]) << " z_dp-z_base " << fmt("%+.2f", gap) << " (vnf "
      << fmt("%.1f", own.mean_vnf) << " vs " << fmt("%.1f", base_vnf) << ")";
  }
  const double secs = secs_so_far + seconds_since(t0);
  report(6, "DP-vs-baseline parity", ok && secs <= kParityBudgetS, d.str(), secs);
}

void degenerate(const ToySetup& toy) {
  const auto t0 = Clock::now();
  auto cfg = toy.config;
  cfg.ppo.total_steps = 2048;
  const double a = toy.dist.quantile(0.5);
  auto dp = rl::train(toy.topo, toy.ds.splits.train, toy.ds.splits.val,
                      rl::PreferenceSource::dynamic(pref::PreferenceDistribution::point(a)), cfg);
  auto base = rl::train(toy.topo, toy.ds.splits.train, toy.ds.splits.val, rl::PreferenceSource::fixed(a), cfg);
  const bool same = dp.reward_trace == base.reward_trace;
  report(7, "degenerate-distribution equivalence", same,
         std::to_string(dp.reward_trace.size()) + " steps, traces " + (same ? "identical" : "differ"),
         seconds_since(t0));
}

std::array<double, 3> window_means(const std::vector<eval::TrajectoryPoint>& traj, std::int64_t b1, std::int64_t b2) {
  std::array<double, 3> sum{}, n{};
  for (const auto& p : traj) {
    const int w = p.t < b1 ? 0 : p.t < b2 ? 1 : 2;
    sum[w] += p.vnf_total;
    n[w] += 1.0;
  }
  for (int w = 0; w < 3; ++w) sum[w] = n[w] > 0 ? sum[w] / n[w] : 0.0;
  return sum;
}

void scenario(const ToySetup& toy, const rl::Agent& dp, const rl::Agent& baseline) {
  const auto t0 = Clock::now();
  std::vector<datagen::DatasetRecord> records(toy.ds.splits.val);
  records.insert(records.end(), toy.ds.splits.test.begin(), toy.ds.splits.test.end());
  const auto n = static_cast<std::int64_t>(records.size());
  const std::int64_t b1 = n / 3, b2 = 2 * n / 3;
  const double lo = toy.dist.quantile(0.2), hi = toy.dist.quantile(0.99);
  eval::Scenario sc;
  sc.events.push_back({b1, eval::EventKind::kSetAlpha, hi, 0});
  sc.events.push_back({b2, eval::EventKind::kSetAlpha, lo, 0});
  const auto d = window_means(eval::run_scenario(dp, toy.topo, records, toy.config.env, sc, {lo, std::nullopt}), b1, b2);
  const auto b = window_means(eval::run_scenario(baseline, toy.topo, records, toy.config.env, sc, {lo, std::nullopt}), b1, b2);
  const double bmax = std::max({b[0], b[1], b[2]}), bmin = std::min({b[0], b[1], b[2]});
  const double variation = bmax > 0.0 ? (bmax - bmin) / bmax : 0.0;
  std::ostringstream out;
  out << "dp vnf " << fmt("%.2f", d[0]) << "/" << fmt("%.2f", d[1]) << "/" << fmt("%.2f", d[2]) << ", baseline vnf "
      << fmt("%.2f", b[0]) << "/" << fmt("%.2f", b[1]) << "/" << fmt("%.2f", b[2]) << ", variation " << fmt("%.3f", variation);
  report(8, "scenario response", d[1] < d[0] && d[1] < d[2] && variation < kBaselineVariation, out.str(),
         seconds_since(t0));
}

void dataset_pipeline() {
  const auto t0 = Clock::now();
  const auto topo = sim::Topology::load(data_dir() / "topologies" / "internet2.json");
  const fs::path tmp = fs::temp_directory_path() / ("prefnet-acceptance-" + std::to_string(::getpid()));
  auto a = datagen::generate(topo, 1), b = datagen::generate(topo, 1);
  datagen::save_dataset(tmp / "a", a);
  datagen::save_dataset(tmp / "b", b);
  bool identical = true;
  for (const char* f : {"meta.json", "train.ndjson", "val.ndjson", "test.ndjson"}) {
    std::ifstream fa(tmp / "a" / f, std::ios::binary), fb(tmp / "b" / f, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    identical &= sa.str() == sb.str() && !sa.str().empty();
  }
  fs::remove_all(tmp);

  const std::size_t n = a.splits.train.size() + a.splits.val.size() + a.splits.test.size();
  const bool sizes = a.splits.val.size() == n / 10 && a.splits.test.size() == n / 10 &&
                     a.splits.train.size() == n - 2 * (n / 10);
  std::vector<datagen::DatasetRecord> all(a.splits.train);
  all.insert(all.end(), a.splits.val.begin(), a.splits.val.end());
  all.insert(all.end(), a.splits.test.begin(), a.splits.test.end());
  const auto delays = datagen::record_delays(topo, all);
  const auto violated = std::count_if(delays.begin(), delays.end(), [&](double x) { return x > a.meta.sla_ms; });
  const double rate = static_cast<double>(violated) / static_cast<double>(delays.size());
  std::ostringstream d;
  d << "byte-identical " << (identical ? "yes" : "no") << ", split " << a.splits.train.size() << "/" << a.splits.val.size()
    << "/" << a.splits.test.size() << ", sla " << fmt("%.1f", a.meta.sla_ms) << " ms, violations " << fmt("%.4f", rate);
  report(9, "dataset pipeline", identical && sizes && std::abs(rate - kViolationTarget) <= kViolationTolerance, d.str(),
         seconds_since(t0));
}

}  // namespace

int main() {
  quantiles();
  fit_recovery();
  pushforward();
  gradients();

  const auto t0 = Clock::now();
  ToySetup toy;
  auto dp = toy.train(rl::PreferenceSource::dynamic(toy.dist));
  const double dp_secs = seconds_since(t0);
  tradeoff(toy, dp.agent, dp_secs);

  const std::vector<double> alphas{toy.dist.quantile(0.2), toy.dist.quantile(0.6), toy.dist.quantile(0.99)};
  std::vector<rl::Agent> baselines;
  for (double a : alphas) baselines.push_back(toy.train(rl::PreferenceSource::fixed(a)).agent);
  parity(toy, dp.agent, alphas, baselines, seconds_since(t0));

  degenerate(toy);
  scenario(toy, dp.agent, baselines[0]);
  dataset_pipeline();
  return failures == 0 ? 0 : 1;
}
