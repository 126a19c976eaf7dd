#include "qpemerge/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "qpemerge/error.hpp"
#include "qpemerge/ingest.hpp"

namespace qpemerge {
namespace {

struct MetricRow {
  const char* csv_label;
  const char* text_label;
  MetricValue MetricsReport::*field;
};

constexpr std::array<MetricRow, 5> kRows{{
    {"CC", "CC", &MetricsReport::cc},
    {"RMSE", "RMSE", &MetricsReport::rmse},
    {"RB", "RB (%)", &MetricsReport::rb_percent},
    {"POD", "POD", &MetricsReport::pod},
    {"FAR", "FAR", &MetricsReport::far},
}};

std::vector<std::string> station_order(std::span<const MetricsReport> reports) {
  std::vector<std::string> out;
  for (const auto& r : reports) {
    if (std::find(out.begin(), out.end(), r.station_id) == out.end()) {
      out.push_back(r.station_id);
    }
  }
  return out;
}

const MetricsReport* find_report(std::span<const MetricsReport> reports, const std::string& station,
                                 const std::string& product) {
  for (const auto& r : reports) {
    if (r.station_id == station && r.product == product) {
      return &r;
    }
  }
  return nullptr;
}

std::string full_precision(const MetricValue& v) { return v.value ? format_value(*v.value) : "undef"; }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == sep) {
    out.emplace_back();
  }
  return out;
}

std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string format_metric(const MetricValue& v) {
  if (!v.value) {
    return "undef";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", *v.value);
  std::string s = buf;
  if (s == "-0.000") {
    s = "0.000";
  }
  return s;
}

std::vector<std::string> table_product_order(std::span<const MetricsReport> reports) {
  std::vector<std::string> out;
  for (const char* known : {"merged", "mrms", "imerg_e", "stage4"}) {
    if (std::any_of(reports.begin(), reports.end(), [&](const auto& r) { return r.product == known; })) {
      out.emplace_back(known);
    }
  }
  for (const auto& r : reports) {
    if (std::find(out.begin(), out.end(), r.product) == out.end()) {
      out.push_back(r.product);
    }
  }
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports) {
  const auto products = table_product_order(reports);
  out << "station,metric";
  for (const auto& p : products) {
    out << ',' << Product::from_name(p).display_name();
  }
  out << '\n';
  for (const auto& station : station_order(reports)) {
    for (const auto& row : kRows) {
      out << station << ',' << row.csv_label;
      for (const auto& p : products) {
        const auto* r = find_report(reports, station, p);
        out << ',' << (r ? format_metric(r->*row.field) : "NA");
      }
      out << '\n';
    }
  }
}

void write_metrics_text(std::ostream& out, std::span<const MetricsReport> reports) {
  const auto products = table_product_order(reports);
  constexpr int kLabelWidth = 8;
  constexpr int kCellWidth = 10;
  char buf[128];
  bool first = true;
  for (const auto& station : station_order(reports)) {
    if (!first) {
      out << '\n';
    }
    first = false;
    out << station << '\n';
    std::snprintf(buf, sizeof buf, "%-*s", kLabelWidth, "Metric");
    out << buf;
    for (const auto& p : products) {
      std::snprintf(buf, sizeof buf, "%*s", kCellWidth, Product::from_name(p).display_name().c_str());
      out << buf;
    }
    out << '\n';
    for (const auto& row : kRows) {
      std::snprintf(buf, sizeof buf, "%-*s", kLabelWidth, row.text_label);
      out << buf;
      for (const auto& p : products) {
        const auto* r = find_report(reports, station, p);
        const std::string cell = r ? format_metric(r->*row.field) : "NA";
        std::snprintf(buf, sizeof buf, "%*s", kCellWidth, cell.c_str());
        out << buf;
      }
      out << '\n';
    }
  }
}

void write_metrics_detail_csv(std::ostream& out, std::span<const MetricsReport> reports) {
  out << "station,product,n,cc,rmse,rb_percent,pod,far,miss_ratio,hits,misses,false_alarms,correct_negatives,"
         "threshold,undefined\n";
  for (const auto& r : reports) {
    std::string undefined;
    for (const auto* v : {&r.cc, &r.rmse, &r.rb_percent, &r.pod, &r.far, &r.miss_ratio}) {
      if (!v->defined()) {
        if (!undefined.empty()) {
          undefined += "; ";
        }
        undefined += v->undefined_reason;
      }
    }
    out << r.station_id << ',' << r.product << ',' << r.n << ',' << full_precision(r.cc) << ','
        << full_precision(r.rmse) << ',' << full_precision(r.rb_percent) << ',' << full_precision(r.pod) << ','
        << full_precision(r.far) << ',' << full_precision(r.miss_ratio) << ',' << r.contingency.hits << ','
        << r.contingency.misses << ',' << r.contingency.false_alarms << ',' << r.contingency.correct_negatives << ','
        << format_value(r.contingency.threshold) << ',' << '"' << undefined << '"' << '\n';
  }
}

void emit_metrics_table(const std::filesystem::path& dir, std::span<const MetricsReport> reports) {
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw DataError("cannot write " + (dir / name).string());
    }
    return f;
  };
  {
    auto f = open("metrics.csv");
    write_metrics_csv(f, reports);
  }
  {
    auto f = open("metrics.txt");
    write_metrics_text(f, reports);
  }
  {
    auto f = open("metrics_detail.csv");
    write_metrics_detail_csv(f, reports);
  }
}

void TimeseriesTable::validate() const {
  if (columns.empty()) {
    throw DataError("time-series table has no columns");
  }
  const auto& ref = columns.front();
  for (const auto& c : columns) {
    if (c.start != ref.start || c.step != ref.step || c.size() != ref.size() || c.missing.size() != c.size()) {
      throw DataError("misaligned series in time-series table for " + station_id + " (" + c.product.name() + ")");
    }
  }
  if (fold.size() != ref.size() || phase.size() != ref.size()) {
    throw DataError("fold/phase columns do not match series length for " + station_id);
  }
}

void write_timeseries_csv(std::ostream& out, const TimeseriesTable& table) {
  table.validate();
  const auto& ref = table.columns.front();
  out << "# station=" << table.station_id << " step_minutes=" << ref.step.count() << " unit=mm/h\n";
  out << "timestamp";
  for (const auto& c : table.columns) {
    out << ',' << c.product.name();
  }
  out << ",fold,phase\n";
  for (std::size_t i = 0; i < ref.size(); ++i) {
    out << format_timestamp(ref.time_at(i));
    for (const auto& c : table.columns) {
      out << ',';
      if (c.is_missing(i)) {
        out << kMissingToken;
      } else {
        out << format_value(c.values[i]);
      }
    }
    out << ',';
    if (table.fold[i] < 0) {
      out << kMissingToken;
    } else {
      out << table.fold[i];
    }
    out << ',' << table.phase[i] << '\n';
  }
}

TimeseriesTable read_timeseries_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw DataError(source_name + ": malformed header");
  }
  TimeseriesTable table;
  std::chrono::minutes step{60};
  {
    std::istringstream ss(line.substr(2));
    std::string field;
    while (ss >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) {
        throw DataError(source_name + ": malformed header field '" + field + "'");
      }
      const auto key = field.substr(0, eq);
      const auto value = field.substr(eq + 1);
      if (key == "station") {
        table.station_id = value;
      } else if (key == "step_minutes") {
        step = std::chrono::minutes{std::stoi(value)};
      }
    }
  }
  if (!std::getline(in, line)) {
    throw DataError(source_name + ": missing column header");
  }
  const auto names = split(line, ',');
  if (names.size() < 4 || names.front() != "timestamp" || names[names.size() - 2] != "fold" ||
      names.back() != "phase") {
    throw DataError(source_name + ": expected 'timestamp,<series...>,fold,phase'");
  }
  const std::size_t ncols = names.size() - 3;
  for (std::size_t j = 0; j < ncols; ++j) {
    TimeSeries s;
    s.station_id = table.station_id;
    s.product = Product::from_name(names[j + 1]);
    s.step = step;
    table.columns.push_back(std::move(s));
  }
  std::size_t line_no = 2;
  TimePoint prev{};
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != names.size()) {
      throw DataError(source_name + ":" + std::to_string(line_no) + ": wrong number of fields");
    }
    const auto t = parse_timestamp(fields[0]);
    if (table.fold.empty()) {
      for (auto& c : table.columns) {
        c.start = t;
      }
    } else if (t - prev != step) {
      throw DataError(source_name + ":" + std::to_string(line_no) + ": irregular spacing");
    }
    prev = t;
    for (std::size_t j = 0; j < ncols; ++j) {
      bool miss = false;
      const double v = parse_value_token(fields[j + 1], miss);
      table.columns[j].values.push_back(v);
      table.columns[j].missing.push_back(miss ? 1 : 0);
    }
    const auto& fold_tok = fields[names.size() - 2];
    table.fold.push_back(fold_tok == kMissingToken ? -1 : std::stoi(fold_tok));
    table.phase.push_back(fields.back());
  }
  return table;
}

TimeseriesTable read_timeseries_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + file.string());
  }
  return read_timeseries_csv(in, file.string());
}

std::vector<ScatterPoint> log_scatter(const TimeSeries& p, const TimeSeries& o,
                                      std::span<const std::uint8_t> validation_mask) {
  if (p.start != o.start || p.step != o.step || p.size() != o.size()) {
    throw DataError("log_scatter: series are not aligned");
  }
  if (!validation_mask.empty() && validation_mask.size() != p.size()) {
    throw DataError("log_scatter: validation mask has the wrong length");
  }
  std::vector<ScatterPoint> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.is_missing(i) || o.is_missing(i) || !(p.values[i] > 0.0) || !(o.values[i] > 0.0)) {
      continue;
    }
    const double lo = std::log10(o.values[i]);
    const double lp = std::log10(p.values[i]);
    if (lo < kScatterLogMin || lo > kScatterLogMax || lp < kScatterLogMin || lp > kScatterLogMax) {
      continue;
    }
    out.push_back({p.time_at(i), lo, lp, validation_mask.empty() || validation_mask[i] != 0});
  }
  return out;
}

void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points) {
  out << "timestamp,log10_obs,log10_pred,validation\n";
  for (const auto& pt : points) {
    out << format_timestamp(pt.time) << ',' << format_value(pt.log_obs) << ',' << format_value(pt.log_pred) << ','
        << (pt.validation ? 1 : 0) << '\n';
  }
}

std::vector<ScatterPoint> read_scatter_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "timestamp,log10_obs,log10_pred,validation") {
    throw DataError("not a scatter file");
  }
  std::vector<ScatterPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 4) {
      throw DataError("malformed scatter row '" + line + "'");
    }
    ScatterPoint pt;
    pt.time = parse_timestamp(f[0]);
    pt.log_obs = std::stod(f[1]);
    pt.log_pred = std::stod(f[2]);
    pt.validation = f[3] == "1";
    out.push_back(pt);
  }
  return out;
}

void render_timeseries_svg(std::ostream& out, const TimeseriesTable& table) {
  table.validate();
  constexpr double kWidth = 1000.0;
  constexpr double kHeight = 360.0;
  constexpr double kMargin = 40.0;
  static constexpr std::array<const char*, 6> kColors{"#000000", "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                                                      "#9467bd"};
  const std::size_t n = table.columns.front().size();
  double vmax = 0.0;
  for (const auto& c : table.columns) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!c.is_missing(i)) {
        vmax = std::max(vmax, c.values[i]);
      }
    }
  }
  if (vmax <= 0.0) {
    vmax = 1.0;
  }
  const double xs = n > 1 ? (kWidth - 2 * kMargin) / static_cast<double>(n - 1) : 0.0;
  const double ys = (kHeight - 2 * kMargin) / vmax;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Shade calibration rows, mirroring the calibration/validation figure.
  for (std::size_t i = 0; i < n; ++i) {
    if (table.phase[i] == "calibration") {
      out << "<rect x=\"" << svg_number(kMargin + xs * static_cast<double>(i)) << "\" y=\"" << kMargin
          << "\" width=\"" << svg_number(std::max(xs, 1.0)) << "\" height=\"" << kHeight - 2 * kMargin
          << "\" fill=\"#eeeeee\"/>\n";
    }
  }
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    const auto& c = table.columns[j];
    out << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << kColors[j % kColors.size()] << "\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      if (c.is_missing(i)) {
        continue;
      }
      out << svg_number(kMargin + xs * static_cast<double>(i)) << ','
          << svg_number(kHeight - kMargin - ys * c.values[i]) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kMargin + 120.0 * static_cast<double>(j) << "\" y=\"20\" fill=\""
        << kColors[j % kColors.size()] << "\" font-size=\"12\">" << c.product.display_name() << "</text>\n";
  }
  out << "</svg>\n";
}

void render_scatter_svg(std::ostream& out, std::span<const ScatterPoint> points, const std::string& title) {
  constexpr double kSize = 400.0;
  constexpr double kMargin = 40.0;
  const double scale = (kSize - 2 * kMargin) / (kScatterLogMax - kScatterLogMin);
  const auto px = [&](double v) { return kMargin + (v - kScatterLogMin) * scale; };
  const auto py = [&](double v) { return kSize - kMargin - (v - kScatterLogMin) * scale; };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize - 2 * kMargin << "\" height=\""
      << kSize - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px(kScatterLogMin) << "\" y1=\"" << py(kScatterLogMin) << "\" x2=\"" << px(kScatterLogMax)
      << "\" y2=\"" << py(kScatterLogMax) << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
  out << "<text x=\"" << kMargin << "\" y=\"20\" font-size=\"12\">" << title << "</text>\n";
  for (const auto& pt : points) {
    out << "<circle r=\"2\" cx=\"" << svg_number(px(pt.log_obs)) << "\" cy=\"" << svg_number(py(pt.log_pred))
        << "\" fill=\"" << (pt.validation ? "#1f77b4" : "#bbbbbb") << "\"/>\n";
  }
  out << "</svg>\n";
}

std::string sha256_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + file.string());
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw DataError("sha256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got > 0) {
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace qpemerge
