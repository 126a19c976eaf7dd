#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qpemerge/error.hpp"
#include "qpemerge/rng.hpp"
#include "qpemerge/scaler.hpp"
#include "qpemerge/timeutil.hpp"
#include "qpemerge/trainer.hpp"

using namespace qpemerge;

namespace {

AlignedDataset two_feature_dataset(const std::vector<double>& f1, const std::vector<double>& f2,
                                   const std::vector<double>& y) {
  AlignedDataset ds;
  ds.station_id = "TST";
  ds.start = parse_timestamp("2021-12-01T01:00:00Z");
  ds.feature_names = {"imerg_e", "stage4"};
  for (std::size_t t = 0; t < y.size(); ++t) {
    ds.features.push_back(f1[t]);
    ds.features.push_back(f2[t]);
  }
  ds.target = y;
  return ds;
}

std::vector<std::size_t> iota_range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> v(end - begin);
  std::iota(v.begin(), v.end(), begin);
  return v;
}

TrainConfig small_config(std::size_t epochs) {
  TrainConfig cfg;
  cfg.hidden = 4;
  cfg.seq_len = 4;
  cfg.epochs = epochs;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("initialization follows the configured scale and forget bias") {
  TrainConfig cfg;
  cfg.hidden = 12;
  cfg.seed = 3;
  const auto p = init_params(LstmShape{2, 12}, cfg);
  const double scale = 1.0 / std::sqrt(12.0);
  for (auto g : {Gate::Forget, Gate::Input, Gate::Candidate, Gate::Output}) {
    for (double w : p.weights(g)) {
      CHECK(std::abs(w) <= scale);
    }
  }
  for (double b : p.bias(Gate::Forget)) {
    CHECK(b == 1.0);
  }
  for (auto g : {Gate::Input, Gate::Candidate, Gate::Output}) {
    for (double b : p.bias(g)) {
      CHECK(b == 0.0);
    }
  }
  CHECK(p.head_bias() == 0.0);
  CHECK(init_params(LstmShape{2, 12}, cfg) == p);
}

TEST_CASE("zero data trains to the scaler origin") {
  const std::size_t n = 400;
  const std::vector<double> zeros(n, 0.0);
  const auto raw = two_feature_dataset(zeros, zeros, zeros);
  const std::vector<IndexRange> cal{{0, n}};
  const auto scaled = fit_scaler(raw, cal).apply(raw);
  TrainConfig cfg;
  cfg.seed = 5;
  const auto result = train(scaled, {iota_range(11, 280), iota_range(280, n)}, cfg);
  REQUIRE(result.history.size() == 100);
  REQUIRE(result.history.back().validation.has_value());
  CHECK(*result.history.back().validation < 1e-4);
}

TEST_CASE("training is bit-reproducible") {
  Rng rng(1);
  std::vector<double> a(200);
  std::vector<double> b(200);
  std::vector<double> y(200);
  for (std::size_t t = 0; t < 200; ++t) {
    a[t] = rng.normal();
    b[t] = rng.normal();
    y[t] = 0.5 * a[t] - b[t];
  }
  const auto ds = two_feature_dataset(a, b, y);
  const WindowIndices idx{iota_range(3, 150), iota_range(150, 200)};
  const auto r1 = train(ds, idx, small_config(5));
  const auto r2 = train(ds, idx, small_config(5));
  CHECK(r1.params == r2.params);
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t e = 0; e < r1.history.size(); ++e) {
    CHECK(r1.history[e].train == r2.history[e].train);
    CHECK(r1.history[e].validation == r2.history[e].validation);
  }
  auto other = small_config(5);
  other.seed = 43;
  CHECK_FALSE(train(ds, idx, other).params == r1.params);
}

TEST_CASE("linear combination of two features is learned") {
  const std::size_t n = 1500;
  Rng rng(2024);
  std::vector<double> f1(n);
  std::vector<double> f2(n);
  std::vector<double> y(n);
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    s1 = 0.8 * s1 + rng.normal();
    s2 = 0.8 * s2 + rng.normal();
    f1[t] = std::exp(0.5 * s1);
    f2[t] = std::exp(0.5 * s2);
    y[t] = 0.6 * f1[t] + 0.4 * f2[t];
  }
  const auto raw = two_feature_dataset(f1, f2, y);
  const std::size_t split = 1050;
  const std::vector<IndexRange> cal{{0, split}};
  const auto scaler = fit_scaler(raw, cal);
  TrainConfig cfg;
  cfg.seed = 17;
  const auto result = train(scaler.apply(raw), {iota_range(11, split), {}}, cfg);
  const auto pred = predict_series(raw, {split, n}, result.params, scaler, cfg.seq_len);
  std::vector<double> p;
  std::vector<double> o;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!pred.is_missing(k)) {
      p.push_back(pred.values[k]);
      o.push_back(y[split + k]);
    }
  }
  const double corr = oracle::naive_cc(p, o);
  MESSAGE("validation CC = " << corr);
  CHECK(corr > 0.95);
}

TEST_CASE("prediction regions carry their own warm-up") {
  const std::size_t n = 600;
  std::vector<double> a(n, 1.0);
  std::vector<double> y(n, 2.0);
  for (std::size_t t = 0; t < n; ++t) {
    a[t] += 0.01 * static_cast<double>(t % 7);
  }
  const auto ds = two_feature_dataset(a, a, y);
  const std::vector<IndexRange> cal{{0, n}};
  const auto scaler = fit_scaler(ds, cal);
  Rng rng(0);
  const auto params = oracle::random_params(LstmShape{2, 3}, rng);

  const auto twelve = predict_series(ds, {100, 112}, params, scaler, 12);
  CHECK(twelve.size() == 12);
  CHECK(twelve.missing_count() == 11);
  CHECK_FALSE(twelve.is_missing(11));
  CHECK(twelve.start == ds.time_at(100));

  const auto block = predict_series(ds, {0, 512}, params, scaler, 12);
  CHECK(block.size() - block.missing_count() == 501);

  const auto shorter = predict_series(ds, {0, 5}, params, scaler, 12);
  CHECK(shorter.missing_count() == 5);
}

TEST_CASE("negative model output is clamped to zero") {
  const std::size_t n = 50;
  std::vector<double> a(n);
  std::vector<double> y(n);
  for (std::size_t t = 0; t < n; ++t) {
    a[t] = static_cast<double>(t % 5);
    y[t] = static_cast<double>(t % 3);
  }
  const auto ds = two_feature_dataset(a, a, y);
  const std::vector<IndexRange> cal{{0, n}};
  const auto scaler = fit_scaler(ds, cal);
  LstmParams p(LstmShape{2, 3});
  p.head_bias() = -100.0;
  const auto pred = predict_series(ds, {0, n}, p, scaler, 4);
  for (std::size_t k = 3; k < n; ++k) {
    CHECK(pred.values[k] == 0.0);
    CHECK_FALSE(pred.is_missing(k));
  }
}

TEST_CASE("training argument errors") {
  const std::vector<double> v(30, 1.0);
  const auto ds = two_feature_dataset(v, v, v);
  CHECK_THROWS_AS(train(ds, {{}, {}}, small_config(1)), DataError);
  CHECK_THROWS_AS(train(ds, {{2}, {}}, small_config(1)), DataError);
  CHECK_THROWS_AS(train(ds, {{30}, {}}, small_config(1)), DataError);
  auto bad = small_config(1);
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(ds, {{5}, {}}, bad), UsageError);
  bad = small_config(1);
  bad.beta2 = 1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = small_config(0);
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("divergence is reported with its epoch and batch") {
  std::vector<double> a(40);
  for (std::size_t t = 0; t < 40; ++t) {
    a[t] = static_cast<double>(t);
  }
  auto ds = two_feature_dataset(a, a, a);
  ds.target[20] = 1e308;
  auto cfg = small_config(2);
  cfg.batch_size = 64;
  try {
    (void)train(ds, {iota_range(3, 40), {}}, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch 1, batch 1") != std::string::npos);
  }
}
