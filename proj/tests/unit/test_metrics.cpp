#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qpemerge/error.hpp"
#include "qpemerge/metrics.hpp"
#include "qpemerge/timeutil.hpp"

using namespace qpemerge;

namespace {

TimeSeries series(const std::string& product, std::vector<double> v) {
  return make_series("TST", Product::from_name(product), parse_timestamp("2021-12-01T01:00:00Z"), std::move(v));
}

// Rain-like values: about 40% exact zeros, the rest lognormal.
std::vector<double> rainy(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = rng.uniform01() < 0.4 ? 0.0 : std::exp(rng.normal());
  }
  return v;
}

}  // namespace

TEST_CASE("correlation examples") {
  const std::vector<double> a{0.5, 1.5, 0.0, 3.0};
  CHECK(cc(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cc(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
  const std::vector<double> p{0, 1, 0, 2};
  const std::vector<double> o{0, 2, 1, 3};
  CHECK(std::abs(cc(p, o) - oracle::naive_cc(p, o)) <= 1e-12);
  CHECK_THROWS_AS(cc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), UndefinedMetric);
  CHECK_THROWS_AS(cc(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0}), UndefinedMetric);
  CHECK_THROWS_AS(cc(std::vector<double>{1}, std::vector<double>{1}), UndefinedMetric);
  CHECK_THROWS_AS(cc(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), DataError);
}

TEST_CASE("rmse examples") {
  const std::vector<double> o{0.2, 1.0, 4.0};
  CHECK(rmse(o, o) == 0.0);
  CHECK(rmse(std::vector<double>{1.2, 2.0, 5.0}, o) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rmse(std::vector<double>{0, 3}, std::vector<double>{0, 0}) == doctest::Approx(std::sqrt(4.5)));
  CHECK_THROWS_AS(rmse(std::vector<double>{1}, o), DataError);
}

TEST_CASE("relative bias examples") {
  const std::vector<double> o{0.0, 1.0, 2.5};
  CHECK(relative_bias(o, o) == 0.0);
  CHECK(relative_bias(std::vector<double>{0.0, 2.0, 5.0}, o) == doctest::Approx(100.0));
  CHECK(relative_bias(std::vector<double>{0, 0, 0}, o) == doctest::Approx(-100.0));
  CHECK_THROWS_AS(relative_bias(o, std::vector<double>{0, 0, 0}), UndefinedMetric);
}

TEST_CASE("contingency examples") {
  const auto t = contingency(std::vector<double>{0, 0.2, 0.5, 0}, std::vector<double>{0, 0.3, 0, 0.2}, 0.1);
  CHECK(t.hits == 1);
  CHECK(t.false_alarms == 1);
  CHECK(t.misses == 1);
  CHECK(t.correct_negatives == 1);

  const std::vector<double> same{0, 0.1, 0.11, 5};
  const auto s = contingency(same, same, 0.1);
  CHECK(s.misses == 0);
  CHECK(s.false_alarms == 0);
  CHECK(s.hits == 2);

  const auto none = contingency(same, std::vector<double>{1, 2, 3, 4}, 10.0);
  CHECK(none.hits + none.misses + none.false_alarms == 0);
  CHECK(none.correct_negatives == 4);
}

TEST_CASE("pod, far and miss ratio") {
  ContingencyTable t;
  t.hits = 3;
  t.misses = 1;
  CHECK(pod(t) == 0.75);
  CHECK(miss_ratio(t) == 0.25);
  t.misses = 0;
  CHECK(pod(t) == 1.0);
  t.hits = 0;
  t.misses = 2;
  CHECK(pod(t) == 0.0);

  ContingencyTable f;
  f.hits = 4;
  CHECK(far(f) == 0.0);
  f.hits = 0;
  f.false_alarms = 2;
  CHECK(far(f) == 1.0);
  f.hits = 1;
  f.false_alarms = 3;
  CHECK(far(f) == 0.75);

  CHECK_THROWS_AS(pod(ContingencyTable{}), UndefinedMetric);
  CHECK_THROWS_AS(far(ContingencyTable{}), UndefinedMetric);
}

TEST_CASE("evaluate_all on a perfect product") {
  const auto o = series("gauge", {0.0, 0.5, 2.0, 0.0, 1.0});
  auto p = o;
  p.product = Product::merged();
  const auto r = evaluate_all(p, o, 0.1);
  CHECK(r.n == 5);
  CHECK(*r.cc.value == doctest::Approx(1.0));
  CHECK(*r.rmse.value == 0.0);
  CHECK(*r.rb_percent.value == 0.0);
  CHECK(*r.pod.value == 1.0);
  CHECK(*r.far.value == 0.0);
  CHECK_FALSE(r.any_undefined());
}

TEST_CASE("evaluate_all flags undefined scores instead of zeroing them") {
  const auto o = series("gauge", {0.0, 0.5, 2.0, 0.0, 1.0});
  const auto p = series("imerg_e", {0, 0, 0, 0, 0});
  const auto r = evaluate_all(p, o, 0.1);
  CHECK(*r.rb_percent.value == doctest::Approx(-100.0));
  CHECK(*r.pod.value == 0.0);
  CHECK_FALSE(r.far.defined());
  CHECK_FALSE(r.far.undefined_reason.empty());
  CHECK_FALSE(r.cc.defined());
  CHECK(r.any_undefined());
}

TEST_CASE("missing positions are excluded and sample sets are shared") {
  auto o = series("gauge", {1, 2, 3, 4, 5, 6});
  auto a = series("imerg_e", {1, 2, 3, 4, 5, 60});
  auto b = series("stage4", {100, 2, 3, 4, 5, 6});
  a.missing[5] = 1;
  b.missing[0] = 1;
  const auto single = evaluate_all(a, o, 0.1);
  CHECK(single.n == 5);
  CHECK(*single.rmse.value == 0.0);

  const std::vector<TimeSeries> both{a, b};
  const auto reports = evaluate_products(both, o, 0.1);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].n == 4);
  CHECK(reports[1].n == 4);
  CHECK(*reports[1].rmse.value == 0.0);

  auto all_missing = a;
  std::fill(all_missing.missing.begin(), all_missing.missing.end(), 1);
  CHECK_THROWS_AS(evaluate_all(all_missing, o, 0.1), DataError);
  const auto shifted = series("imerg_e", {1, 2, 3});
  CHECK_THROWS_AS(evaluate_all(shifted, o, 0.1), DataError);
}

TEST_CASE("random pairs match the naive formulas") {
  Rng rng(200);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = rainy(rng, 200);
    const auto o = rainy(rng, 200);
    const auto r = evaluate_all(series("merged", p), series("gauge", o), 0.1);
    const auto c = oracle::naive_counts(p, o, 0.1);
    CHECK(std::abs(*r.cc.value - oracle::naive_cc(p, o)) <= 1e-12);
    CHECK(std::abs(*r.rmse.value - oracle::naive_rmse(p, o)) <= 1e-12);
    CHECK(std::abs(*r.rb_percent.value - oracle::naive_rb(p, o)) <= 1e-12);
    CHECK(std::abs(*r.pod.value - oracle::naive_pod(c)) <= 1e-12);
    CHECK(std::abs(*r.far.value - oracle::naive_far(c)) <= 1e-12);
  }
}

TEST_CASE("metric identities") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = rainy(rng, 150);
    const auto o = rainy(rng, 150);
    const double a = 0.01 + 10.0 * rng.uniform01();
    const double b = rng.normal() * 5.0;
    std::vector<double> affine(p.size());
    std::vector<double> neg(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      affine[i] = a * p[i] + b;
      neg[i] = -p[i];
    }
    CHECK(std::abs(cc(affine, o) - cc(p, o)) <= 1e-12);
    CHECK(std::abs(cc(neg, o) + cc(p, o)) <= 1e-12);
    CHECK(rmse(p, o) == rmse(o, p));
    CHECK(rmse(p, o) > 0.0);

    const double k = 0.05 + 5.0 * rng.uniform01();
    std::vector<double> ko(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
      ko[i] = k * o[i];
    }
    CHECK(std::abs(relative_bias(ko, o) - (k - 1.0) * 100.0) <= 1e-12);

    const auto t = contingency(p, o, 0.1);
    std::size_t obs = 0;
    std::size_t pred = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      obs += o[i] > 0.1 ? 1 : 0;
      pred += p[i] > 0.1 ? 1 : 0;
    }
    CHECK(t.total() == p.size());
    CHECK(t.observed_events() == obs);
    CHECK(t.predicted_events() == pred);

    // Strictly monotone transform applied to values and threshold alike.
    std::vector<double> lp(p.size());
    std::vector<double> lo(o.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      lp[i] = std::log1p(p[i]) * 3.0;
      lo[i] = std::log1p(o[i]) * 3.0;
    }
    const auto tt = contingency(lp, lo, std::log1p(0.1) * 3.0);
    CHECK(pod(tt) == pod(t));
    CHECK(far(tt) == far(t));
  }
}
