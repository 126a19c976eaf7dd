#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "qpemerge/error.hpp"
#include "qpemerge/ingest.hpp"
#include "qpemerge/rng.hpp"
#include "qpemerge/timeutil.hpp"

using namespace qpemerge;

namespace {

const TimePoint kStart = parse_timestamp("2021-12-01T01:00:00Z");

ParseResult parse(const std::string& text) {
  std::istringstream in(text);
  return parse_canonical(in, "test.csv");
}

TimeSeries with_missing(std::vector<double> v, std::vector<std::size_t> gaps) {
  auto s = make_series("ANT", Product::from_name("stage4"), kStart, std::move(v));
  for (auto i : gaps) {
    s.missing[i] = 1;
    s.values[i] = 0.0;
  }
  return s;
}

const std::string kHeader = "# station=ANT product=stage4 step_minutes=60 unit=mm/h\ntimestamp,value\n";

}  // namespace

TEST_CASE("canonical file parses with header metadata and NA") {
  const auto r = parse(kHeader +
                       "2021-12-01T01:00:00Z,0.25\n"
                       "2021-12-01T02:00:00Z,NA\n"
                       "2021-12-01T03:00:00Z,1e-3\n");
  CHECK(r.warnings.empty());
  const auto& s = r.series;
  CHECK(s.station_id == "ANT");
  CHECK(s.product.name() == "stage4");
  CHECK(s.step == std::chrono::minutes{60});
  CHECK(s.start == kStart);
  CHECK(s.size() == 3);
  CHECK(s.values[0] == 0.25);
  CHECK(s.is_missing(1));
  CHECK(s.values[2] == 0.001);
}

TEST_CASE("tolerated irregularities become warnings") {
  std::string text = kHeader + "2021-12-01T01:00:00Z,0.25\n\n2021-12-01T02:00:00Z,0.5\n";
  std::string crlf;
  for (char c : text) {
    if (c == '\n') {
      crlf += '\r';
    }
    crlf += c;
  }
  const auto r = parse(crlf);
  CHECK(r.series.size() == 2);
  CHECK(r.warnings.size() == 2);
}

TEST_CASE("malformed files are data errors") {
  const std::string row = "2021-12-01T01:00:00Z,0.25\n";
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("timestamp,value\n" + row), DataError);
  CHECK_THROWS_AS(parse("# station=ANT product=stage4 step_minutes=15 unit=mm/h\ntimestamp,value\n" + row), DataError);
  CHECK_THROWS_AS(parse("# station=ANT product=stage4 step_minutes=60 unit=in/h\ntimestamp,value\n" + row), DataError);
  CHECK_THROWS_AS(parse("# station=ANT product=stage4 step_minutes=60\ntimestamp,value\n" + row), DataError);
  CHECK_THROWS_AS(parse("# station=ANT product=stage4 step_minutes=60 unit=mm/h extra=1\ntimestamp,value\n" + row),
                  DataError);
  CHECK_THROWS_AS(parse("# station=ANT product=stage4 step_minutes=60 unit=mm/h\ntime,value\n" + row), DataError);
  CHECK_THROWS_AS(parse(kHeader + "2021-12-01T01:00:00Z,-0.5\n"), DataError);
  CHECK_THROWS_AS(parse(kHeader + "2021-12-01T01:00:00Z,nan\n"), DataError);
  CHECK_THROWS_AS(parse(kHeader + "2021-12-01T01:00:00Z,inf\n"), DataError);
  CHECK_THROWS_AS(parse(kHeader + "2021-12-01T01:00:00Z,1,2\n"), DataError);
  CHECK_THROWS_AS(parse(kHeader + "2021-12-01T01:00:00Z,0,5\n"), DataError);
  CHECK_THROWS_AS(parse(kHeader + "2021-12-01T01:00:00Z,1.5x\n"), DataError);
  CHECK_THROWS_AS(parse(kHeader + row + "2021-12-01T01:00:00Z,0.1\n"), DataError);
  CHECK_THROWS_AS(parse(kHeader + row + "2021-12-01T03:00:00Z,0.1\n"), DataError);
  CHECK_THROWS_AS(parse(kHeader + "2021-12-01T01:30:00Z,0.1\n"), DataError);
}

TEST_CASE("write then parse reproduces values exactly") {
  Rng rng(3);
  std::vector<double> v(300);
  for (double& x : v) {
    x = rng.uniform01() < 0.3 ? 0.0 : std::exp(3.0 * rng.normal());
  }
  auto s = with_missing(v, {0, 17, 299});
  std::ostringstream out;
  write_canonical(out, s);
  const auto back = parse(out.str());
  CHECK(back.warnings.empty());
  CHECK(back.series.values == s.values);
  CHECK(back.series.missing == s.missing);
  CHECK(back.series.start == s.start);
}

TEST_CASE("value tokens") {
  bool missing = false;
  CHECK(parse_value_token("NA", missing) == 0.0);
  CHECK(missing);
  CHECK(parse_value_token("0.1", missing) == 0.1);
  CHECK_FALSE(missing);
  CHECK(format_value(0.1) == "0.1");
  CHECK(format_value(0.0) == "0");
  CHECK(format_value(1.0 / 3.0) == "0.3333333333333333");
  CHECK_THROWS_AS(parse_value_token("", missing), DataError);
  CHECK_THROWS_AS(parse_value_token("0,1", missing), DataError);
}

TEST_CASE("half-hour rates average into hourly rates") {
  auto h = make_series("ANT", Product::from_name("imerg_e"), kStart, {2.0, 4.0, 0.7, 0.7, 1.0, 3.0},
                       std::chrono::minutes{30});
  h.missing[4] = 1;
  const auto out = aggregate_halfhourly_to_hourly(h);
  CHECK(out.step == std::chrono::minutes{60});
  CHECK(out.size() == 3);
  CHECK(out.values[0] == 3.0);
  CHECK(out.values[1] == 0.7);
  CHECK(out.is_missing(2));
}

TEST_CASE("aggregation conserves accumulation") {
  Rng rng(12);
  std::vector<double> v(2 * 500);
  for (double& x : v) {
    x = std::exp(rng.normal());
  }
  const auto h = make_series("ANT", Product::from_name("imerg_e"), kStart, v, std::chrono::minutes{30});
  const auto out = aggregate_halfhourly_to_hourly(h);
  const double half_total = std::accumulate(v.begin(), v.end(), 0.0) * 0.5;
  const double hour_total = std::accumulate(out.values.begin(), out.values.end(), 0.0) * 1.0;
  CHECK(std::abs(hour_total - half_total) <= 1e-9 * half_total);
}

TEST_CASE("aggregation preconditions") {
  const auto odd = make_series("ANT", Product::from_name("imerg_e"), kStart, {1, 2, 3}, std::chrono::minutes{30});
  CHECK_THROWS_AS(aggregate_halfhourly_to_hourly(odd), DataError);
  const auto late = make_series("ANT", Product::from_name("imerg_e"), kStart + std::chrono::minutes(30), {1, 2},
                                std::chrono::minutes{30});
  CHECK_THROWS_AS(aggregate_halfhourly_to_hourly(late), DataError);
  const auto hourly = make_series("ANT", Product::from_name("imerg_e"), kStart, {1, 2});
  CHECK_THROWS_AS(aggregate_halfhourly_to_hourly(hourly), DataError);
}

TEST_CASE("gap filling examples") {
  CHECK(fill_missing_linear(with_missing({2.0, 0.0, 4.0}, {1})).values == std::vector<double>{2.0, 3.0, 4.0});
  CHECK(fill_missing_linear(with_missing({0.0, 5.0}, {0})).values == std::vector<double>{5.0, 5.0});
  CHECK(fill_missing_linear(with_missing({1.0, 0, 0, 4.0}, {1, 2})).values ==
        std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(fill_missing_linear(with_missing({0.0, 3.0, 0.0, 0.0}, {0, 2, 3})).values ==
        std::vector<double>{3.0, 3.0, 3.0, 3.0});
  CHECK(fill_missing_linear(with_missing({1, 2}, {})).missing_count() == 0);
  CHECK_THROWS_AS(fill_missing_linear(with_missing({1, 2}, {0, 1})), DataError);
}

TEST_CASE("gap filling properties") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(100);
    std::vector<std::size_t> gaps;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = rng.uniform01() < 0.3 ? 0.0 : 10.0 * rng.uniform01();
      if (rng.uniform01() < 0.4) {
        gaps.push_back(i);
      }
    }
    if (gaps.size() == v.size()) {
      continue;
    }
    const auto s = with_missing(v, gaps);
    const auto once = fill_missing_linear(s);
    CHECK(once.missing_count() == 0);
    const auto twice = fill_missing_linear(once);
    CHECK(twice.values == once.values);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s.is_missing(i)) {
        CHECK(once.values[i] == s.values[i]);
        continue;
      }
      std::size_t lo = i;
      while (lo > 0 && s.is_missing(lo)) {
        --lo;
      }
      std::size_t hi = i;
      while (hi + 1 < s.size() && s.is_missing(hi)) {
        ++hi;
      }
      double a = s.is_missing(lo) ? s.values[hi] : s.values[lo];
      double b = s.is_missing(hi) ? a : s.values[hi];
      CHECK(once.values[i] >= std::min(a, b));
      CHECK(once.values[i] <= std::max(a, b));
    }
  }
}

TEST_CASE("gap statistics") {
  const auto g = gap_stats(with_missing({1, 0, 0, 1, 0, 1, 0, 0, 0}, {1, 2, 4, 6, 7, 8}));
  CHECK(g.length == 9);
  CHECK(g.missing == 6);
  CHECK(g.gap_count == 3);
  CHECK(g.longest_gap == 3);
}
