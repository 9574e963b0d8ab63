#include <doctest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prefnet/eval/eval.hpp"
#include "prefnet/rl/ppo.hpp"
#include "prefnet/rl/reward.hpp"
#include "prefnet/rl/sampling.hpp"
#include "prefnet/rl/trainer.hpp"
#include "toy.hpp"

using namespace prefnet;
using namespace prefnet::rl;

namespace {

EnvConfig env_config(double sla, std::size_t episode = 32) {
  EnvConfig c;
  c.sla_ms = sla;
  c.episode_length = episode;
  return c;
}

Matrix uniform_probs(std::size_t rows) { return Matrix(rows, 3, 1.0 / 3.0); }

// A_t = Σ_l (γλ)^l δ_{t+l}, truncated at the end of the episode.
std::vector<double> gae_oracle(const std::vector<double>& r, const std::vector<double>& v, const std::vector<bool>& done,
                               double bootstrap, double g, double l) {
  const std::size_t n = r.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? v[t + 1] : bootstrap;
    delta[t] = r[t] + (done[t] ? 0.0 : g * next) - v[t];
  }
  std::vector<double> adv(n);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0, w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      acc += w * delta[k];
      if (done[k]) break;
      w *= g * l;
    }
    adv[t] = acc;
  }
  return adv;
}

struct Fixture {
  sim::Topology topo = prefnet::test::toy4();
  datagen::Dataset ds = prefnet::test::toy_dataset(topo, 3);
};

Transition first_transition(const nn::PolicyValueNet& net, const Fixture& fx, double reward) {
  ScalingEnv env(fx.topo, fx.ds.splits.train, env_config(fx.ds.meta.sla_ms));
  std::vector<encoding::PreferenceInput> pin{{0.01, nullptr}};
  Transition t;
  t.state = *env.observe(pin);
  nn::NoGradGuard guard;
  auto out = net.forward(t.state);
  Rng rng = make_rng(4);
  Matrix probs = out.log_probs.to_matrix();
  for (double& p : probs.data()) p = std::exp(p);
  auto s = sample_action(probs, rng);
  t.classes = s.classes;
  t.log_prob = s.log_prob;
  t.value = out.value.item();
  t.reward = reward;
  t.done = true;
  return t;
}

double param_distance(const nn::PolicyValueNet& a, const nn::PolicyValueNet& b) {
  auto pa = a.named_parameters(), pb = b.named_parameters();
  double d = 0.0;
  for (std::size_t k = 0; k < pa.size(); ++k)
    for (std::size_t i = 0; i < pa[k].second.size(); ++i)
      d = std::max(d, std::abs(pa[k].second.value()[i] - pb[k].second.value()[i]));
  return d;
}

}  // namespace

TEST_SUITE("rl") {
  TEST_CASE("auto-scaling reward") {
    std::vector<PathDelay> d{{500.0, 1000.0}, {1000.0, 1000.0}};
    CHECK(reward_as(d, 10, 0.01) == doctest::Approx(-0.85));
    CHECK(reward_as(d, 10, 0.0) == doctest::Approx(qos_term(d)));
    CHECK(qos_term(d) == doctest::Approx(-0.75));
    const double base = reward_as(d, 10, 0.0);
    CHECK(reward_as(d, 10, 0.02) - base == doctest::Approx(2 * (reward_as(d, 10, 0.01) - base)));
    CHECK_THROWS_AS(reward_as({}, 1, 0.1), ContractViolation);
  }

  TEST_CASE("power-management reward") {
    std::vector<PathDelay> d{{500.0, 1000.0}, {1000.0, 1000.0}};
    CHECK(reward_pm(d, 10, 3.0, 0.01, 0.1) == doctest::Approx(-1.15));
    CHECK(reward_pm(d, 10, 3.0, 0.01, 0.0) == doctest::Approx(reward_as(d, 10, 0.01)));
    CHECK(reward_pm(d, 10, 0.0, 0.01, 0.4) == doctest::Approx(reward_as(d, 10, 0.01)));
  }

  TEST_CASE("action sampling") {
    Matrix certain(sim::kNumVnfTypes, 3, 0.0);
    for (std::size_t r = 0; r < certain.rows(); ++r) certain(r, 1) = 1.0;
    Rng rng = make_rng(1);
    auto s = sample_action(certain, rng);
    for (auto v : s.action.values) CHECK(v == 0);
    CHECK(s.log_prob == 0.0);

    Matrix uni = uniform_probs(sim::kNumVnfTypes);
    std::array<int, 3> counts{};
    const int draws = 100000;
    for (int i = 0; i < draws / static_cast<int>(sim::kNumVnfTypes); ++i) {
      auto a = sample_action(uni, rng);
      for (auto c : a.classes) ++counts[c];
    }
    for (int c : counts) CHECK(std::abs(static_cast<double>(c) / draws - 1.0 / 3.0) < 0.01);

    Matrix p(sim::kNumVnfTypes * 2, 3);
    Rng r2 = make_rng(2);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double a = uniform01(r2) + 0.1, b = uniform01(r2) + 0.1, c = uniform01(r2) + 0.1;
      p(r, 0) = a / (a + b + c);
      p(r, 1) = b / (a + b + c);
      p(r, 2) = 1.0 - p(r, 0) - p(r, 1);
    }
    std::vector<std::size_t> keep(p.rows(), 1);
    double expect = 0.0;
    for (std::size_t r = 0; r < p.rows(); ++r) expect += std::log(p(r, 1));
    CHECK(joint_log_prob(p, keep) == doctest::Approx(expect));
    auto drawn = sample_action(p, r2);
    CHECK(drawn.log_prob == doctest::Approx(joint_log_prob(p, drawn.classes)));
    for (std::size_t r = 0; r < p.rows(); ++r)
      CHECK(drawn.action.values[r] == static_cast<int>(drawn.classes[r]) - 1);

    Matrix bad(sim::kNumVnfTypes, 3, 0.5);
    CHECK_THROWS_AS(sample_action(bad, r2), ContractViolation);
  }

  TEST_CASE("greedy action ties go to the lower class") {
    Matrix p(sim::kNumVnfTypes, 3);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      p(r, 0) = 0.4;
      p(r, 1) = 0.4;
      p(r, 2) = 0.2;
    }
    p(2, 0) = 0.1;
    p(2, 1) = 0.2;
    p(2, 2) = 0.7;
    auto g = greedy_action(p);
    CHECK(g.action.values[0] == -1);
    CHECK(g.action.values[2] == 1);
  }

  TEST_CASE("GAE matches the direct-sum oracle") {
    Rng rng = make_rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 5 + trial;
      std::vector<double> r(n), v(n);
      std::vector<bool> done(n);
      auto dones = std::make_unique<bool[]>(n);
      for (std::size_t t = 0; t < n; ++t) {
        r[t] = uniform01(rng) - 0.5;
        v[t] = uniform01(rng);
        done[t] = uniform01(rng) < 0.2;
        dones[t] = done[t];
      }
      const double boot = uniform01(rng);
      auto got = compute_gae(r, v, std::span<const bool>(dones.get(), n), boot, 0.97, 0.9);
      auto want = gae_oracle(r, v, done, boot, 0.97, 0.9);
      for (std::size_t t = 0; t < n; ++t) {
        CHECK(got.advantages[t] == doctest::Approx(want[t]).epsilon(1e-12));
        CHECK(got.returns[t] == doctest::Approx(want[t] + v[t]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("clipped surrogate") {
    Fixture fx;
    nn::PolicyValueNet net({8, 2, 1}, 3);
    auto t = first_transition(net, fx, -1.0);
    PpoConfig cfg;
    // Current/old ratio of 1.5 with a positive advantage clips to 1.2.
    t.log_prob -= std::log(1.5);
    net.zero_grad();
    auto loss = ppo_loss(net, t, 2.0, 0.0, cfg);
    CHECK(loss.actor.item() == doctest::Approx(-1.2 * 2.0));
    nn::backward(loss.actor);
    for (auto& [name, p] : net.named_parameters())
      for (double g : p.grad()) CHECK(g == 0.0);

    // With a negative advantage the unclipped branch is the minimum.
    auto neg = ppo_loss(net, t, -2.0, 0.0, cfg);
    CHECK(neg.actor.item() == doctest::Approx(1.5 * 2.0));
  }

  TEST_CASE("zero advantage gives a zero actor gradient") {
    Fixture fx;
    nn::PolicyValueNet net({8, 2, 1}, 5);
    auto t = first_transition(net, fx, -1.0);
    net.zero_grad();
    nn::backward(ppo_loss(net, t, 0.0, 0.0, PpoConfig{}).actor);
    for (auto& [name, p] : net.named_parameters())
      for (double g : p.grad()) CHECK(g == 0.0);
  }

  TEST_CASE("one SGD step moves parameters by the learning rate times the gradient") {
    Fixture fx;
    nn::PolicyValueNet net({6, 1, 1}, 8);
    PpoConfig cfg;
    cfg.optimizer = OptimizerKind::kSgd;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 1;
    cfg.minibatch = 1;
    cfg.normalize_advantages = false;
    cfg.max_grad_norm = 0.0;
    auto t = first_transition(net, fx, -0.7);
    // Single terminal transition: advantage r - V, return r.
    const double advantage = t.reward - t.value;
    const double target = t.reward;

    nn::PolicyValueNet probe(net);
    PpoLearner learner(net, cfg);
    std::vector<Transition> storage{t};
    learner.update(storage, 0.0);
    CHECK(storage.empty());

    auto before = probe.named_parameters();
    auto after = learner.policy().named_parameters();
    auto loss = [&] {
      nn::NoGradGuard guard;
      return ppo_loss(probe, t, advantage, target, cfg).total.item();
    };
    Rng rng = make_rng(1);
    const double h = 1e-5;
    for (std::size_t k = 0; k < before.size(); ++k) {
      auto v = before[k].second.value();
      for (int pick = 0; pick < 3; ++pick) {
        const std::size_t i = rng() % v.size();
        const double keep = v[i];
        v[i] = keep + h;
        const double up = loss();
        v[i] = keep - h;
        const double down = loss();
        v[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double delta = after[k].second.value()[i] - keep;
        INFO(before[k].first);
        CHECK(delta == doctest::Approx(-cfg.learning_rate * numeric).epsilon(1e-5).scale(1e-10));
      }
    }
  }

  TEST_CASE("behaviour policy is synced after an update") {
    Fixture fx;
    nn::PolicyValueNet net({6, 1, 1}, 9);
    auto t = first_transition(net, fx, -0.3);
    PpoConfig cfg;
    PpoLearner learner(net, cfg);
    CHECK(param_distance(learner.policy(), learner.behaviour_policy()) == 0.0);
    std::vector<Transition> storage{t, t, t};
    storage[1].reward = -2.0;
    learner.update(storage, 0.0);
    CHECK(param_distance(learner.policy(), net) > 0.0);
    CHECK(param_distance(learner.policy(), learner.behaviour_policy()) == 0.0);
    std::vector<Transition> empty;
    CHECK_THROWS_AS(learner.update(empty, 0.0), ContractViolation);
  }

  TEST_CASE("training is seed deterministic and logs every update") {
    Fixture fx;
    auto cfg = prefnet::test::toy_train_config(fx.ds.meta.sla_ms, 256, 7);
    auto src = PreferenceSource::dynamic(pref::PreferenceDistribution::exponential(46.0));
    std::ostringstream log;
    auto a = train(fx.topo, fx.ds.splits.train, fx.ds.splits.val, src, cfg, &log);
    auto b = train(fx.topo, fx.ds.splits.train, fx.ds.splits.val, src, cfg);
    CHECK(a.reward_trace.size() == 256);
    CHECK(a.reward_trace == b.reward_trace);
    cfg.ppo.seed = 8;
    auto c = train(fx.topo, fx.ds.splits.train, fx.ds.splits.val, src, cfg);
    CHECK(c.reward_trace != a.reward_trace);

    std::istringstream lines(log.str());
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
      auto j = nlohmann::json::parse(line);
      for (const char* key : {"iter", "mean_reward", "actor_loss", "critic_loss", "alpha_sampled"})
        CHECK(j.contains(key));
      CHECK_FALSE(j.contains("beta_sampled"));
      ++n;
    }
    CHECK(n == 4);
  }

  TEST_CASE("power-management training logs beta") {
    Fixture fx;
    auto cfg = prefnet::test::toy_train_config(fx.ds.meta.sla_ms, 64, 7);
    cfg.env.task = Task::kPowerManagement;
    auto src = PreferenceSource::dynamic(pref::PreferenceDistribution::exponential(46.0),
                                         pref::PreferenceDistribution::exponential(42.51));
    auto res = train(fx.topo, fx.ds.splits.train, fx.ds.splits.val, src, cfg);
    REQUIRE(res.log.size() == 1);
    CHECK(res.log[0].contains("beta_sampled"));
    CHECK(res.agent.net().config().pref_dims == 2);
    auto missing = PreferenceSource::dynamic(pref::PreferenceDistribution::exponential(46.0));
    CHECK_THROWS_AS(train(fx.topo, fx.ds.splits.train, fx.ds.splits.val, missing, cfg), ConfigError);
  }

  TEST_CASE("a point-mass distribution reproduces the static baseline") {
    Fixture fx;
    auto cfg = prefnet::test::toy_train_config(fx.ds.meta.sla_ms, 320, 11);
    auto dp = train(fx.topo, fx.ds.splits.train, fx.ds.splits.val,
                    PreferenceSource::dynamic(pref::PreferenceDistribution::point(0.02)), cfg);
    auto base = train(fx.topo, fx.ds.splits.train, fx.ds.splits.val, PreferenceSource::fixed(0.02), cfg);
    CHECK(dp.reward_trace == base.reward_trace);
    CHECK(param_distance(dp.agent.net(), base.agent.net()) == 0.0);
  }

  TEST_CASE("a large resource penalty teaches the agent to scale in") {
    auto topo = prefnet::test::make_topology(3, {{0, 1, 2.0}, {1, 2, 3.0}, {0, 2, 4.0}});
    auto ds = prefnet::test::toy_dataset(topo, 5, 200, 4.0, 60.0);
    double initial = 0.0;
    for (const auto& r : ds.splits.test) initial += sim::total_vnf_count(r.deployment);
    initial /= static_cast<double>(ds.splits.test.size());

    auto cfg = prefnet::test::toy_train_config(ds.meta.sla_ms, 3000, 3);
    auto res = train(topo, ds.splits.train, ds.splits.val, PreferenceSource::fixed(0.5), cfg);
    Preference p{0.5, std::nullopt};
    auto report = eval::eval_static(res.agent, topo, ds.splits.test, cfg.env, p);
    INFO("initial " << initial << " trained " << report.mean_vnf);
    CHECK(report.mean_vnf < initial);
  }

  TEST_CASE("environment keeps one instance of each deployed type") {
    auto topo = prefnet::test::toy4();
    auto ds = prefnet::test::toy_dataset(topo, 3);
    EnvConfig env = env_config(ds.meta.sla_ms);
    ScalingEnv e(topo, ds.splits.train, env);
    sim::ActionMatrix in(4);
    for (auto& v : in.values) v = -1;
    for (int k = 0; k < 10 && !e.done(); ++k) e.step(in, {0.01, std::nullopt});
    for (auto f : sim::kAllVnfTypes)
      if (ds.splits.train[0].deployment.type_total(f) > 0) CHECK(e.deployment().type_total(f) >= 1);

    env.keep_last_instance = false;
    ScalingEnv raw(topo, ds.splits.train, env);
    for (int k = 0; k < 10 && !raw.done(); ++k) raw.step(in, {0.01, std::nullopt});
    CHECK(sim::total_vnf_count(raw.deployment()) == 0);
    auto out = raw.measure({0.01, std::nullopt});
    CHECK(out.violations == out.paths);
    for (double d : out.delays) CHECK(d == doctest::Approx(2.0 * ds.meta.sla_ms));
  }

  TEST_CASE("episode length bounds the environment") {
    auto topo = prefnet::test::toy4();
    auto ds = prefnet::test::toy_dataset(topo, 3);
    ScalingEnv e(topo, ds.splits.train, env_config(ds.meta.sla_ms, 4));
    int steps = 0;
    while (!e.done()) {
      e.step(sim::ActionMatrix(4), {0.0, std::nullopt});
      ++steps;
    }
    CHECK(steps == 4);
    CHECK_THROWS_AS(e.step(sim::ActionMatrix(4), {0.0, std::nullopt}), ContractViolation);
  }
}
