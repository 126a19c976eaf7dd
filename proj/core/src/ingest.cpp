#include "qpemerge/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "qpemerge/error.hpp"

namespace qpemerge {
namespace {

std::map<std::string, std::string> parse_header(std::string_view line, const std::string& source) {
  if (line.size() < 2 || line[0] != '#' || line[1] != ' ') {
    throw DataError(source + ": malformed header (expected '# station=... product=... step_minutes=... unit=mm/h')");
  }
  std::map<std::string, std::string> kv;
  std::istringstream ss{std::string(line.substr(2))};
  std::string field;
  while (ss >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == field.size()) {
      throw DataError(source + ": malformed header field '" + field + "'");
    }
    kv[field.substr(0, eq)] = field.substr(eq + 1);
  }
  for (const char* key : {"station", "product", "step_minutes", "unit"}) {
    if (!kv.contains(key)) {
      throw DataError(source + ": malformed header, missing '" + key + "'");
    }
  }
  if (kv.size() != 4) {
    throw DataError(source + ": malformed header, unexpected fields");
  }
  if (kv["step_minutes"] != "30" && kv["step_minutes"] != "60") {
    throw DataError(source + ": malformed header, step_minutes must be 30 or 60");
  }
  if (kv["unit"] != "mm/h") {
    throw DataError(source + ": malformed header, unit must be mm/h");
  }
  return kv;
}

}  // namespace

double parse_value_token(std::string_view token, bool& missing) {
  missing = false;
  if (token == kMissingToken) {
    missing = true;
    return 0.0;
  }
  if (token.empty()) {
    throw DataError("empty value token");
  }
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  const auto res = std::from_chars(first, last, v, std::chars_format::general);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw DataError("malformed value '" + std::string(token) + "'");
  }
  if (!std::isfinite(v)) {
    throw DataError("non-finite value '" + std::string(token) + "'");
  }
  if (v < 0.0) {
    throw DataError("negative value '" + std::string(token) + "'");
  }
  return v;
}

std::string format_value(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

ParseResult parse_canonical(std::istream& in, const std::string& source_name) {
  ParseResult result;
  std::string line;
  bool saw_crlf = false;
  auto next_line = [&](std::string& out) -> bool {
    if (!std::getline(in, out)) {
      return false;
    }
    if (!out.empty() && out.back() == '\r') {
      out.pop_back();
      saw_crlf = true;
    }
    return true;
  };

  if (!next_line(line)) {
    throw DataError(source_name + ": malformed header (empty file)");
  }
  const auto header = parse_header(line, source_name);
  if (!next_line(line) || line != "timestamp,value") {
    throw DataError(source_name + ": malformed header (second line must be 'timestamp,value')");
  }

  TimeSeries& s = result.series;
  s.station_id = header.at("station");
  s.product = Product::from_name(header.at("product"));
  s.step = std::chrono::minutes{header.at("step_minutes") == "30" ? 30 : 60};

  std::size_t line_no = 2;
  std::size_t blank_lines = 0;
  TimePoint prev{};
  while (next_line(line)) {
    ++line_no;
    if (line.empty()) {
      ++blank_lines;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw DataError(source_name + ":" + std::to_string(line_no) + ": expected 'timestamp,value'");
    }
    TimePoint t;
    bool miss = false;
    double v = 0.0;
    try {
      t = parse_timestamp(std::string_view(line).substr(0, comma));
      v = parse_value_token(std::string_view(line).substr(comma + 1), miss);
    } catch (const DataError& e) {
      throw DataError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (s.values.empty()) {
      s.start = t;
    } else {
      if (t <= prev) {
        throw DataError(source_name + ":" + std::to_string(line_no) + ": non-monotone timestamps");
      }
      if (t - prev != s.step) {
        throw DataError(source_name + ":" + std::to_string(line_no) + ": irregular spacing");
      }
    }
    prev = t;
    s.values.push_back(v);
    s.missing.push_back(miss ? 1 : 0);
  }
  if (s.step == std::chrono::minutes{60} && !s.values.empty() && !is_top_of_hour(s.start)) {
    throw DataError(source_name + ": hourly series must start on the hour");
  }
  if (saw_crlf) {
    result.warnings.push_back(source_name + ": CRLF line endings");
  }
  if (blank_lines > 0) {
    result.warnings.push_back(source_name + ": skipped " + std::to_string(blank_lines) + " blank line(s)");
  }
  return result;
}

ParseResult parse_canonical(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + file.string());
  }
  return parse_canonical(in, file.string());
}

void write_canonical(std::ostream& out, const TimeSeries& series) {
  series.validate();
  out << "# station=" << series.station_id << " product=" << series.product.name()
      << " step_minutes=" << series.step.count() << " unit=mm/h\n";
  out << "timestamp,value\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_timestamp(series.time_at(i)) << ',';
    if (series.is_missing(i)) {
      out << kMissingToken;
    } else {
      out << format_value(series.values[i]);
    }
    out << '\n';
  }
}

void write_canonical(const std::filesystem::path& file, const TimeSeries& series) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + file.string());
  }
  write_canonical(out, series);
}

TimeSeries aggregate_halfhourly_to_hourly(const TimeSeries& halfhourly) {
  if (halfhourly.step != std::chrono::minutes{30}) {
    throw DataError("aggregation expects a 30-minute series");
  }
  if (halfhourly.size() % 2 != 0) {
    throw DataError("odd length half-hourly series cannot be aggregated");
  }
  if (!is_top_of_hour(halfhourly.start)) {
    throw DataError("misaligned start: half-hourly series must begin on the hour");
  }
  TimeSeries out;
  out.station_id = halfhourly.station_id;
  out.product = halfhourly.product;
  out.start = halfhourly.start;
  out.step = std::chrono::minutes{60};
  const std::size_t n = halfhourly.size() / 2;
  out.values.resize(n, 0.0);
  out.missing.resize(n, 0);
  for (std::size_t h = 0; h < n; ++h) {
    const std::size_t a = 2 * h;
    const std::size_t b = a + 1;
    if (halfhourly.is_missing(a) || halfhourly.is_missing(b)) {
      out.missing[h] = 1;
    } else {
      out.values[h] = 0.5 * (halfhourly.values[a] + halfhourly.values[b]);
    }
  }
  return out;
}

TimeSeries fill_missing_linear(const TimeSeries& series) {
  const std::size_t n = series.size();
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < n; ++i) {
    if (!series.is_missing(i)) {
      present.push_back(i);
    }
  }
  if (present.empty()) {
    throw DataError("cannot fill all-missing series " + series.station_id + "/" + series.product.name());
  }
  TimeSeries out = series;
  std::fill(out.missing.begin(), out.missing.end(), 0);
  for (std::size_t i = 0; i < present.front(); ++i) {
    out.values[i] = series.values[present.front()];
  }
  for (std::size_t i = present.back() + 1; i < n; ++i) {
    out.values[i] = series.values[present.back()];
  }
  for (std::size_t k = 0; k + 1 < present.size(); ++k) {
    const std::size_t lo = present[k];
    const std::size_t hi = present[k + 1];
    if (hi - lo < 2) {
      continue;
    }
    const double vlo = series.values[lo];
    const double vhi = series.values[hi];
    const double span = static_cast<double>(hi - lo);
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double w = static_cast<double>(i - lo) / span;
      out.values[i] = std::clamp(vlo + w * (vhi - vlo), std::min(vlo, vhi), std::max(vlo, vhi));
    }
  }
  return out;
}

GapStats gap_stats(const TimeSeries& series) {
  GapStats g;
  g.length = series.size();
  std::size_t run = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.is_missing(i)) {
      ++g.missing;
      if (run == 0) {
        ++g.gap_count;
      }
      ++run;
      g.longest_gap = std::max(g.longest_gap, run);
    } else {
      run = 0;
    }
  }
  return g;
}

}  // namespace qpemerge
