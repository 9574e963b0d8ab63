#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "prefnet/core/errors.hpp"
#include "prefnet/pref/distribution.hpp"
#include "prefnet/pref/fit.hpp"

using namespace prefnet;
using namespace prefnet::pref;

namespace {

double round4(double x) { return std::round(x * 1e4) / 1e4; }

std::vector<EffectSample> synthetic(double lambda, double v_max) {
  std::vector<EffectSample> out;
  for (int i = 0; i <= 5; ++i) {
    const double a = 0.01 * i;
    out.push_back({a, v_max * std::exp(-lambda * a)});
  }
  return out;
}

}  // namespace

TEST_SUITE("pref") {
  TEST_CASE("exponential closed forms") {
    auto d = PreferenceDistribution::exponential(145.45);
    CHECK(d.density(0.0) == doctest::Approx(145.45));
    CHECK(d.mean() == doctest::Approx(1.0 / 145.45));
    CHECK(d.quantile(0.0) == 0.0);
    CHECK(d.quantile(0.8) == doctest::Approx(0.011065).epsilon(1e-4));
    const double qs[] = {0.2, 0.4, 0.6, 0.8, 0.99};
    const double grid[] = {0.0015, 0.0035, 0.0063, 0.0111, 0.0317};
    for (int i = 0; i < 5; ++i) CHECK(round4(d.quantile(qs[i])) == doctest::Approx(grid[i]).epsilon(1e-12));
    CHECK_THROWS_AS(d.quantile(1.0), ContractViolation);
    CHECK_THROWS_AS(d.density(-1.0), ContractViolation);
  }

  TEST_CASE("quantile inverts the cdf") {
    auto e = PreferenceDistribution::exponential(42.51);
    auto u = PreferenceDistribution::uniform(0.01, 0.05);
    for (double x : {0.0, 0.001, 0.02, 0.1, 0.3}) CHECK(std::abs(e.quantile(e.cdf(x)) - x) < 1e-10);
    for (double x : {0.01, 0.02, 0.033, 0.05}) CHECK(std::abs(u.quantile(u.cdf(x)) - x) < 1e-10);
    CHECK(u.quantile(1.0) == doctest::Approx(0.05));
  }

  TEST_CASE("inverse-cdf samples follow the exponential law") {
    auto d = PreferenceDistribution::exponential(145.45);
    Rng rng = make_rng(1234);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = d.sample(rng);
    std::sort(xs.begin(), xs.end());
    const double ks = ks_statistic(xs, [](double x) { return 1.0 - std::exp(-145.45 * x); });
    CHECK(ks < 0.02);
  }

  TEST_CASE("spec strings") {
    CHECK(PreferenceDistribution::parse("exp:145.45") == PreferenceDistribution::exponential(145.45));
    CHECK(PreferenceDistribution::parse("unif:0:0.05") == PreferenceDistribution::uniform(0.0, 0.05));
    CHECK(PreferenceDistribution::parse("point:0.0063") == PreferenceDistribution::point(0.0063));
    auto s = PreferenceDistribution::parse("sched:0=0.0015,50=0.0317,100=0.0015");
    CHECK(s.kind() == DistKind::kSchedule);
    CHECK(s.value_at(0) == 0.0015);
    CHECK(s.value_at(49) == 0.0015);
    CHECK(s.value_at(50) == 0.0317);
    CHECK(s.value_at(150) == 0.0015);
    for (const char* spec : {"exp:145.45", "unif:0:0.05", "point:0.0063", "sched:0=0.0015,50=0.0317"})
      CHECK(PreferenceDistribution::parse(PreferenceDistribution::parse(spec).spec()).spec() == spec);
    CHECK_THROWS_AS(PreferenceDistribution::parse("exp:-1"), ConfigError);
    CHECK_THROWS_AS(PreferenceDistribution::parse("unif:0.05:0.01"), ConfigError);
    CHECK_THROWS_AS(PreferenceDistribution::parse("sched:5=0.1,5=0.2"), ConfigError);
    CHECK_THROWS_AS(PreferenceDistribution::parse("gauss:1"), ConfigError);
  }

  TEST_CASE("sampling consumes one draw and point masses are constant") {
    auto p = PreferenceDistribution::point(0.01);
    Rng a = make_rng(3), b = make_rng(3);
    CHECK(p.sample(a) == 0.01);
    b();
    CHECK(a() == b());
  }

  TEST_CASE("offset subtraction") {
    std::vector<double> prefs{0.0, 0.01, 0.02};
    std::vector<double> raw{5.0, 3.0, 2.0};
    auto s = offset_effects(prefs, raw);
    CHECK(s[0].effect == 3.0);
    CHECK(s[1].effect == 1.0);
    CHECK(s[2].effect == 0.0);
    std::vector<double> one_p{0.0}, one_r{7.5};
    CHECK(offset_effects(one_p, one_r)[0].effect == 0.0);
  }

  TEST_CASE("fit recovers lambda from noiseless samples") {
    for (double lambda : {145.45, 241.05, 42.51})
      for (double v_max : {1.0, 14.0}) {
        auto fit = fit_exponential(synthetic(lambda, v_max));
        CHECK(std::abs(fit.lambda - lambda) / lambda < 1e-3);
        CHECK(fit.v_max == doctest::Approx(v_max));
        CHECK(fit.rss >= 0.0);
      }
  }

  TEST_CASE("two-point fit is exact") {
    const double a = 0.02;
    std::vector<EffectSample> s{{0.0, 3.0}, {a, 3.0 * std::exp(-1.0)}};
    CHECK(fit_exponential(s).lambda == doctest::Approx(1.0 / a).epsilon(1e-6));
  }

  TEST_CASE("fit is scale consistent") {
    auto base = synthetic(100.0, 2.0);
    auto scaled = base;
    for (auto& s : scaled) s.effect *= 7.0;
    auto f1 = fit_exponential(base), f2 = fit_exponential(scaled);
    CHECK(f2.lambda == doctest::Approx(f1.lambda).epsilon(1e-6));
    CHECK(f2.v_max == doctest::Approx(7.0 * f1.v_max));
  }

  TEST_CASE("joint v_max fit") {
    FitOptions opt;
    opt.joint_v_max = true;
    auto fit = fit_exponential(synthetic(145.45, 14.0), opt);
    CHECK(std::abs(fit.lambda - 145.45) / 145.45 < 1e-3);
    CHECK(fit.v_max == doctest::Approx(14.0).epsilon(1e-3));
  }

  TEST_CASE("degenerate fits") {
    std::vector<EffectSample> zeros{{0.0, 0.0}, {0.01, 0.0}, {0.02, 0.0}};
    CHECK_THROWS_AS(fit_exponential(zeros), DegenerateFit);
    std::vector<EffectSample> same_pref{{0.01, 1.0}, {0.01, 0.0}};
    CHECK_THROWS_AS(fit_exponential(same_pref), ContractViolation);
  }

  TEST_CASE("pushforward uniformity") {
    CHECK(pushforward_ks(145.45, 145.45, 14.0, 100000, 9) < 0.02);
    // Doubling λ in the map makes V/V_max = U², CDF √v: KS = max(√v - v) = 1/4.
    const double off = pushforward_ks(145.45, 2 * 145.45, 14.0, 100000, 9);
    CHECK(off > 0.1);
    CHECK(off == doctest::Approx(0.25).epsilon(0.05));
    CHECK(pushforward_ks(145.45, 145.45, 1.0, 1, 9) <= 1.0);
  }

  TEST_CASE("fit report fields") {
    auto fit = fit_exponential(synthetic(145.45, 14.0));
    auto j = fit_report(fit);
    CHECK(j.contains("lambda"));
    CHECK(j.contains("v_max"));
    CHECK(j.contains("rss"));
    CHECK(j.contains("iters"));
    CHECK(j["iters"].get<int>() == fit.iterations);
  }
}
