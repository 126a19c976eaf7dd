#include "qpemerge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpemerge/error.hpp"

namespace qpemerge {
namespace {

void require_same_length(std::span<const double> p, std::span<const double> o) {
  if (p.size() != o.size()) {
    throw DataError("length mismatch: " + std::to_string(p.size()) + " vs " + std::to_string(o.size()));
  }
}

double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) {
    s += v;
  }
  return s / static_cast<double>(x.size());
}

template <typename F>
MetricValue guarded(F&& f) {
  try {
    return {f(), {}};
  } catch (const UndefinedMetric& e) {
    return {std::nullopt, e.what()};
  }
}

}  // namespace

double cc(std::span<const double> p, std::span<const double> o) {
  require_same_length(p, o);
  if (p.size() < 2) {
    throw UndefinedMetric("correlation needs at least 2 samples");
  }
  const auto constant = [](std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
  };
  if (constant(p) || constant(o)) {
    throw UndefinedMetric("correlation undefined for a constant series");
  }
  const double pm = mean(p);
  const double om = mean(o);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dp = p[i] - pm;
    const double dob = o[i] - om;
    sxy += dp * dob;
    sxx += dp * dp;
    syy += dob * dob;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedMetric("correlation undefined for a constant series");
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::max(-1.0, std::min(1.0, r));
}

double rmse(std::span<const double> p, std::span<const double> o) {
  require_same_length(p, o);
  if (p.empty()) {
    throw UndefinedMetric("rmse needs at least 1 sample");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - o[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(p.size()));
}

double relative_bias(std::span<const double> p, std::span<const double> o) {
  require_same_length(p, o);
  double diff = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    diff += p[i] - o[i];
    total += o[i];
  }
  if (total == 0.0) {
    throw UndefinedMetric("relative bias undefined for zero observed total");
  }
  return 100.0 * diff / total;
}

ContingencyTable contingency(std::span<const double> p, std::span<const double> o, double threshold) {
  require_same_length(p, o);
  ContingencyTable t;
  t.threshold = threshold;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pe = p[i] > threshold;
    const bool oe = o[i] > threshold;
    if (pe && oe) {
      ++t.hits;
    } else if (oe) {
      ++t.misses;
    } else if (pe) {
      ++t.false_alarms;
    } else {
      ++t.correct_negatives;
    }
  }
  return t;
}

double pod(const ContingencyTable& t) {
  if (t.observed_events() == 0) {
    throw UndefinedMetric("POD undefined without observed events");
  }
  return static_cast<double>(t.hits) / static_cast<double>(t.observed_events());
}

double far(const ContingencyTable& t) {
  if (t.predicted_events() == 0) {
    throw UndefinedMetric("FAR undefined without predicted events");
  }
  return static_cast<double>(t.false_alarms) / static_cast<double>(t.predicted_events());
}

double miss_ratio(const ContingencyTable& t) {
  if (t.observed_events() == 0) {
    throw UndefinedMetric("miss ratio undefined without observed events");
  }
  return static_cast<double>(t.misses) / static_cast<double>(t.observed_events());
}

MetricsReport evaluate_all(const TimeSeries& p, const TimeSeries& o, double threshold,
                           std::span<const std::uint8_t> exclude) {
  if (p.start != o.start || p.step != o.step || p.size() != o.size()) {
    throw DataError("evaluate_all: series " + p.product.name() + " and " + o.product.name() + " are not aligned");
  }
  if (!exclude.empty() && exclude.size() != p.size()) {
    throw DataError("evaluate_all: exclusion mask has the wrong length");
  }
  std::vector<double> pv;
  std::vector<double> ov;
  pv.reserve(p.size());
  ov.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.is_missing(i) || o.is_missing(i) || (!exclude.empty() && exclude[i] != 0)) {
      continue;
    }
    pv.push_back(p.values[i]);
    ov.push_back(o.values[i]);
  }
  if (pv.empty()) {
    throw DataError("no overlapping samples for " + p.station_id + "/" + p.product.name());
  }
  MetricsReport r;
  r.station_id = o.station_id;
  r.product = p.product.name();
  r.n = pv.size();
  r.contingency = contingency(pv, ov, threshold);
  r.cc = guarded([&] { return cc(pv, ov); });
  r.rmse = guarded([&] { return rmse(pv, ov); });
  r.rb_percent = guarded([&] { return relative_bias(pv, ov); });
  r.pod = guarded([&] { return pod(r.contingency); });
  r.far = guarded([&] { return far(r.contingency); });
  r.miss_ratio = guarded([&] { return miss_ratio(r.contingency); });
  return r;
}

std::vector<MetricsReport> evaluate_products(std::span<const TimeSeries> products, const TimeSeries& gauge,
                                             double threshold) {
  std::vector<std::uint8_t> exclude(gauge.size(), 0);
  for (const auto& p : products) {
    if (p.size() != gauge.size() || p.start != gauge.start || p.step != gauge.step) {
      throw DataError("product " + p.product.name() + " is not aligned with the gauge");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      exclude[i] |= p.missing[i];
    }
  }
  std::vector<MetricsReport> out;
  out.reserve(products.size());
  for (const auto& p : products) {
    out.push_back(evaluate_all(p, gauge, threshold, exclude));
  }
  return out;
}

}  // namespace qpemerge
