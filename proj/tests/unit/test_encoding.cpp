#include <doctest.h>

#include "prefnet/encoding/encoding.hpp"
#include "support.hpp"

using namespace prefnet;
using namespace prefnet::sim;
using encoding::PreferenceInput;

namespace {

std::vector<int> random_permutation(std::size_t n, Rng& rng) {
  std::vector<int> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int>(i);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

Topology permute(const Topology& topo, const std::vector<int>& pi) {
  std::vector<Edge> edges;
  for (const auto& e : topo.edges()) edges.push_back({pi[e.i], pi[e.j], e.delay_ms});
  return prefnet::test::make_topology(topo.num_nodes(), edges);
}

Deployment permute(const Deployment& dep, const std::vector<int>& pi) {
  Deployment out(dep.num_nodes());
  for (NodeId n = 0; n < static_cast<NodeId>(dep.num_nodes()); ++n)
    for (auto f : kAllVnfTypes) out.set_count(pi[n], f, dep.count(n, f));
  return out;
}

}  // namespace

TEST_SUITE("encoding") {
  TEST_CASE("adjacency is inverse delay") {
    auto topo = prefnet::test::make_topology(3, {{0, 1, 2.0}, {1, 2, 4.0}});
    auto m = encoding::adjacency(topo);
    CHECK(m(0, 1) == 0.5);
    CHECK(m(1, 0) == 0.5);
    CHECK(m(2, 1) == 0.25);
    CHECK(m(0, 2) == 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(m(i, i) == 0.0);
    topo.set_status(1, NodeStatus::kDown);
    auto down = encoding::adjacency(topo);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(down(1, i) == 0.0);
      CHECK(down(i, 1) == 0.0);
    }
  }

  TEST_CASE("internet2 adjacency is symmetric and nonnegative") {
    auto topo = Topology::load(prefnet::test::data_path("topologies/internet2.json"));
    auto m = encoding::adjacency(topo);
    CHECK(m == m.transposed());
    for (double v : m.data()) CHECK(v >= 0.0);
  }

  TEST_CASE("annotation columns") {
    Deployment empty(4);
    ServiceRequest req{0, 3, 10.0, ServiceType::kNatProxy, 1.0};
    auto x = encoding::annotate(empty, req);
    REQUIRE(x.rows() == 4);
    REQUIRE(x.cols() == kNumVnfTypes + 2);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < kNumVnfTypes; ++c) CHECK(x(r, c) == 0.0);
    CHECK(x(0, kNumVnfTypes) == 1.0);
    CHECK(x(3, kNumVnfTypes + 1) == 1.0);

    Rng rng = make_rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 3 + trial % 6;
      auto dep = prefnet::test::random_deployment(n, rng, 4, 0.3);
      const auto src = static_cast<NodeId>(rng() % n);
      const auto dst = static_cast<NodeId>((src + 1 + rng() % (n - 1)) % n);
      auto a = encoding::annotate(dep, {src, dst, 5.0, ServiceType::kNatWano, 1.0});
      double s_src = 0.0, s_dst = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        for (auto f : kAllVnfTypes)
          CHECK(a(r, static_cast<std::size_t>(f)) == dep.count(static_cast<NodeId>(r), f));
        s_src += a(r, kNumVnfTypes);
        s_dst += a(r, kNumVnfTypes + 1);
      }
      CHECK(s_src == 1.0);
      CHECK(s_dst == 1.0);
    }
  }

  TEST_CASE("preference normalization") {
    auto e = pref::PreferenceDistribution::exponential(145.45);
    CHECK(pref::normalize_preference(0.006875, e) == doctest::Approx(1.0).epsilon(1e-4));
    auto u = pref::PreferenceDistribution::uniform(0.0, 0.05);
    CHECK(pref::normalize_preference(0.025, u) == doctest::Approx(1.0));
    CHECK(pref::normalize_preference(0.0, u) == 0.0);
    CHECK(pref::normalize_preference(3 * 0.01, e) == doctest::Approx(3 * pref::normalize_preference(0.01, e)));
    CHECK_THROWS_AS(pref::normalize_preference(0.1, pref::PreferenceDistribution::point(0.0)),
                    NormalizationUndefined);

    Rng rng = make_rng(77);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += pref::normalize_preference(e.sample(rng), e);
    CHECK(acc / n >= 0.99);
    CHECK(acc / n <= 1.01);
  }

  TEST_CASE("assemble state") {
    auto topo = prefnet::test::make_topology(3, {{0, 1, 2.0}, {1, 2, 4.0}});
    auto m = std::make_shared<const Matrix>(encoding::adjacency(topo));
    Deployment dep(3);
    auto e = pref::PreferenceDistribution::exponential(100.0);
    std::vector<ServiceRequest> one{{0, 2, 1.0, ServiceType::kNatProxy, 1.0}};
    std::vector<PreferenceInput> as{{0.02, &e}};
    auto s = encoding::assemble_state(m, one, dep, as);
    CHECK(s.annotations.size() == 1);
    REQUIRE(s.preference.size() == 1);
    CHECK(s.preference[0] == doctest::Approx(2.0));

    std::vector<ServiceRequest> three{one[0], {1, 0, 1.0, ServiceType::kNatWano, 1.0}, {2, 1, 1.0, ServiceType::kNatProxy, 1.0}};
    std::vector<PreferenceInput> pm{{0.02, &e}, {0.005, &e}};
    auto s3 = encoding::assemble_state(m, three, dep, pm);
    CHECK(s3.annotations.size() == 3);
    CHECK(s3.adjacency.get() == m.get());
    CHECK(s3.preference.size() == 2);

    std::vector<PreferenceInput> pinned{{0.7, nullptr}};
    CHECK(encoding::assemble_state(m, one, dep, pinned).preference[0] == 1.0);

    CHECK_THROWS_AS(encoding::assemble_state(m, {}, dep, as), ContractViolation);
  }

  TEST_CASE("encoding is permutation equivariant") {
    Rng rng = make_rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 4 + trial % 4;
      auto topo = prefnet::test::random_topology(n, rng);
      auto dep = prefnet::test::random_deployment(n, rng);
      auto pi = random_permutation(n, rng);
      auto ptopo = permute(topo, pi);
      auto pdep = permute(dep, pi);
      ServiceRequest req{0, static_cast<NodeId>(n - 1), 5.0, ServiceType::kNatProxy, 1.0};
      ServiceRequest preq{pi[0], pi[n - 1], 5.0, ServiceType::kNatProxy, 1.0};
      auto m = encoding::adjacency(topo), pm = encoding::adjacency(ptopo);
      auto x = encoding::annotate(dep, req), px = encoding::annotate(pdep, preq);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) CHECK(pm(pi[i], pi[j]) == m(i, j));
        for (std::size_t c = 0; c < x.cols(); ++c) CHECK(px(pi[i], c) == x(i, c));
      }
    }
  }

  TEST_CASE("scale-in mask") {
    auto topo = prefnet::test::make_topology(2, {{0, 1, 1.0}});
    Deployment dep(2);
    dep.set_count(0, VnfType::kNat, 1);
    topo.set_status(1, NodeStatus::kDown);
    auto mask = encoding::scale_in_mask(dep, topo);
    const auto nat = static_cast<std::size_t>(VnfType::kNat);
    const auto fw = static_cast<std::size_t>(VnfType::kFirewall);
    CHECK(mask(nat, 0) == 0.0);
    CHECK(mask(fw, 0) < -1e6);
    CHECK(mask(fw, 2) == 0.0);
    CHECK(mask(kNumVnfTypes + nat, 1) == 0.0);
    CHECK(mask(kNumVnfTypes + nat, 2) < -1e6);
  }
}
