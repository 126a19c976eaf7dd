#include "qpemerge/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "json.hpp"
#include "qpemerge/error.hpp"
#include "qpemerge/model_io.hpp"
#include "qpemerge/report.hpp"
#include "qpemerge/rng.hpp"
#include "qpemerge/version.hpp"

namespace qpemerge {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kOutputMarker = ".qpe-merge-output";

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + file.string());
  }
  return out;
}

void prepare_output_dir(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) {
      throw UsageError("output path " + dir.string() + " exists and is not a directory");
    }
    if (!fs::is_empty(dir)) {
      if (!overwrite) {
        throw UsageError("output directory " + dir.string() + " is not empty; pass --overwrite to replace it");
      }
      if (!fs::exists(dir / kOutputMarker)) {
        throw UsageError("refusing to overwrite " + dir.string() + ": it was not created by qpe-merge");
      }
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
  open_out(dir / kOutputMarker);
  for (const char* sub : {"timeseries", "fold_timeseries", "scatter", "models", "training"}) {
    fs::create_directories(dir / sub);
  }
}

std::string fold_tag(const std::string& station, std::size_t fold) {
  return station + "_fold" + std::to_string(fold);
}

json gaps_json(const GapStats& g) {
  return {{"length", g.length}, {"missing", g.missing}, {"gap_count", g.gap_count}, {"longest_gap", g.longest_gap}};
}

json range_json(const IndexRange& r) { return json::array({r.begin, r.end}); }

void write_history(const fs::path& file, const TrainResult& tr) {
  auto out = open_out(file);
  out << "epoch,train_loss,validation_loss\n";
  for (std::size_t e = 0; e < tr.history.size(); ++e) {
    const auto& h = tr.history[e];
    out << e + 1 << ',' << format_value(h.train) << ','
        << (h.validation ? format_value(*h.validation) : std::string(kMissingToken)) << '\n';
  }
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Data: return kExitData;
    case ErrorKind::Numeric: return kExitNumeric;
  }
  return kExitData;
}

PreparedStation prepare_station(const RunConfig& cfg, std::size_t station_index) {
  const StationInputs& st = cfg.stations.at(station_index);
  PreparedStation ps;
  ps.index = station_index;
  ps.meta = st.meta;

  std::vector<std::string> order = cfg.features;
  for (const auto& c : cfg.comparison_products(st)) {
    order.push_back(c);
  }
  order.push_back(cfg.target);

  std::vector<TimeSeries> hourly;
  for (const auto& product : order) {
    const auto it = st.files.find(product);
    if (it == st.files.end()) {
      throw DataError("station " + st.meta.id + " product " + product + ": no input file configured");
    }
    const fs::path path = cfg.resolve(it->second);
    const std::string context = "station " + st.meta.id + " product " + product + ": ";
    if (!fs::exists(path)) {
      throw DataError(context + "input file not found: " + path.string());
    }
    try {
      auto parsed = parse_canonical(path);
      if (parsed.series.station_id != st.meta.id) {
        throw DataError("file is for station '" + parsed.series.station_id + "'");
      }
      if (parsed.series.product.name() != product) {
        throw DataError("file is for product '" + parsed.series.product.name() + "'");
      }
      InputRecord rec;
      rec.product = product;
      rec.path = it->second;
      rec.sha256 = sha256_file(path);
      rec.step_minutes = static_cast<int>(parsed.series.step.count());
      rec.warnings = parsed.warnings;
      for (const auto& w : parsed.warnings) {
        spdlog::warn("{}", w);
      }
      TimeSeries s = parsed.series.step == std::chrono::minutes{30}
                         ? aggregate_halfhourly_to_hourly(parsed.series)
                         : std::move(parsed.series);
      rec.gaps = gap_stats(s);
      if (rec.gaps.missing > 0) {
        spdlog::info("{}{} missing hourly values in {} gap(s), longest {}", context, rec.gaps.missing,
                     rec.gaps.gap_count, rec.gaps.longest_gap);
      }
      hourly.push_back(fill_missing_linear(s));
      ps.inputs.push_back(std::move(rec));
    } catch (const DataError& e) {
      throw DataError(context + e.what());
    }
  }

  TimePoint lo = hourly.front().start;
  TimePoint hi = hourly.front().end_time();
  for (const auto& s : hourly) {
    lo = std::max(lo, s.start);
    hi = std::min(hi, s.end_time());
  }
  if (hi <= lo) {
    throw DataError("station " + st.meta.id + ": inputs have no common time span");
  }
  const auto n = static_cast<std::size_t>(std::chrono::duration_cast<std::chrono::hours>(hi - lo).count());
  for (auto& s : hourly) {
    s = trim_to(s, lo, n);
  }
  ps.gauge = hourly.back();
  hourly.pop_back();
  ps.dataset = align(std::span<const TimeSeries>(hourly.data(), cfg.features.size()), ps.gauge);
  ps.products = std::move(hourly);
  return ps;
}

FoldRun run_fold(const PreparedStation& station, const FoldSpec& fold, const RunConfig& cfg, std::uint64_t seed) {
  const std::size_t seq_len = cfg.train.seq_len;
  const auto& ds = station.dataset;
  FoldRun run;
  run.fold = fold;
  run.seed = seed;
  run.scaler = fit_scaler(ds, fold.calibration_ranges);
  const AlignedDataset scaled = run.scaler.apply(ds);

  WindowIndices idx;
  idx.train = window_targets(fold.train_indices, fold.calibration_ranges, seq_len);
  idx.validation = window_targets(fold.cal_val_indices, fold.calibration_ranges, seq_len);
  check_no_leakage(fold, idx.train, seq_len);
  check_no_leakage(fold, idx.validation, seq_len);
  run.train_windows = idx.train.size();
  run.cal_val_windows = idx.validation.size();

  TrainConfig tcfg = cfg.train;
  tcfg.seed = seed;
  run.training = train(scaled, idx, tcfg);

  run.test_prediction = predict_series(ds, fold.test_range, run.training.params, run.scaler, seq_len);

  std::vector<IndexRange> regions = fold.calibration_ranges;
  regions.push_back(fold.test_range);
  std::sort(regions.begin(), regions.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
  std::vector<TimeSeries> parts;
  for (const auto& r : regions) {
    parts.push_back(r == fold.test_range ? run.test_prediction
                                         : predict_series(ds, r, run.training.params, run.scaler, seq_len));
  }
  run.full_prediction = stitch_validation(parts);
  return run;
}

RunSummary run_pipeline(const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const fs::path& out_dir = cfg.output_dir;
  prepare_output_dir(out_dir, options.overwrite);

  const std::size_t nst = cfg.stations.size();
  RunSummary summary;
  summary.stations.resize(nst);
  std::vector<std::optional<PreparedStation>> prepared(nst);
  std::vector<std::vector<FoldSpec>> folds(nst);

  struct Job {
    std::size_t station;
    std::size_t fold;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < nst; ++s) {
    auto& outcome = summary.stations[s];
    outcome.station_id = cfg.stations[s].meta.id;
    try {
      prepared[s] = prepare_station(cfg, s);
      folds[s] = make_folds(prepared[s]->dataset.length(), cfg.folds,
                            FoldOptions{cfg.train.seq_len, cfg.calibration_ratio});
      for (std::size_t k = 0; k < folds[s].size(); ++k) {
        jobs.push_back({s, k});
      }
      outcome.ok = true;
    } catch (const Error& e) {
      outcome.error = e.what();
      outcome.error_kind = e.kind();
      spdlog::error("{}", e.what());
    }
  }

  // Results live in fixed slots so completion order cannot affect the output.
  std::vector<std::vector<std::optional<FoldRun>>> results(nst);
  std::vector<std::vector<std::string>> job_errors(nst);
  std::vector<std::vector<ErrorKind>> job_error_kinds(nst);
  for (std::size_t s = 0; s < nst; ++s) {
    results[s].resize(folds[s].size());
    job_errors[s].resize(folds[s].size());
    job_error_kinds[s].resize(folds[s].size(), ErrorKind::Data);
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto [s, k] = jobs[j];
      try {
        results[s][k] = run_fold(*prepared[s], folds[s][k], cfg, derive_seed(cfg.seed, s, k));
      } catch (const Error& e) {
        job_errors[s][k] = "station " + cfg.stations[s].meta.id + " fold " + std::to_string(k) + ": " + e.what();
        job_error_kinds[s][k] = e.kind();
      } catch (const std::exception& e) {
        job_errors[s][k] = "station " + cfg.stations[s].meta.id + " fold " + std::to_string(k) + ": " + e.what();
        job_error_kinds[s][k] = ErrorKind::Numeric;
      }
    }
  };
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(cfg.jobs, jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < nthreads; ++t) {
      pool.emplace_back(worker);
    }
    worker();
  }

  std::vector<MetricsReport> all_reports;
  json stations_json = json::array();
  for (std::size_t s = 0; s < nst; ++s) {
    auto& outcome = summary.stations[s];
    json sj;
    sj["id"] = outcome.station_id;
    if (outcome.ok) {
      for (std::size_t k = 0; k < folds[s].size(); ++k) {
        if (!job_errors[s][k].empty()) {
          outcome.ok = false;
          outcome.error = job_errors[s][k];
          outcome.error_kind = job_error_kinds[s][k];
          spdlog::error("{}", outcome.error);
          break;
        }
      }
    }
    if (outcome.ok) {
      const PreparedStation& ps = *prepared[s];
      const std::string& id = outcome.station_id;
      try {
        std::vector<TimeSeries> held_out;
        for (const auto& r : results[s]) {
          held_out.push_back(r->test_prediction);
        }
        const TimeSeries merged = stitch_validation(held_out);

        std::vector<TimeSeries> evaluated;
        evaluated.push_back(merged);
        evaluated.insert(evaluated.end(), ps.products.begin(), ps.products.end());
        outcome.reports = evaluate_products(evaluated, ps.gauge, cfg.threshold);
        for (const auto& r : outcome.reports) {
          if (r.any_undefined()) {
            summary.undefined_metric = true;
            spdlog::warn("station {} product {}: undefined metric", id, r.product);
          }
        }
        all_reports.insert(all_reports.end(), outcome.reports.begin(), outcome.reports.end());

        const std::size_t n = ps.gauge.size();
        std::vector<int> fold_of(n, -1);
        for (const auto& f : folds[s]) {
          for (std::size_t t = f.test_range.begin; t < f.test_range.end; ++t) {
            fold_of[t] = static_cast<int>(f.fold_index);
          }
        }

        TimeseriesTable table;
        table.station_id = id;
        table.columns.push_back(ps.gauge);
        table.columns.insert(table.columns.end(), ps.products.begin(), ps.products.end());
        table.columns.push_back(merged);
        table.fold = fold_of;
        table.phase.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
          table.phase[t] = merged.is_missing(t) ? "warmup" : "validation";
        }
        {
          auto f = open_out(out_dir / "timeseries" / (id + ".csv"));
          write_timeseries_csv(f, table);
        }

        std::vector<std::uint8_t> shared(n, 1);
        for (std::size_t t = 0; t < n; ++t) {
          for (const auto& e : evaluated) {
            if (e.is_missing(t)) {
              shared[t] = 0;
            }
          }
        }
        for (const auto& e : evaluated) {
          const auto pts = log_scatter(e, ps.gauge, shared);
          auto f = open_out(out_dir / "scatter" / (id + "_" + e.product.name() + ".csv"));
          write_scatter_csv(f, pts);
        }

        json folds_json = json::array();
        for (const auto& r : results[s]) {
          const auto& fr = *r;
          const std::size_t k = fr.fold.fold_index;
          TimeseriesTable ft;
          ft.station_id = id;
          ft.columns.push_back(ps.gauge);
          ft.columns.insert(ft.columns.end(), ps.products.begin(), ps.products.end());
          ft.columns.push_back(fr.full_prediction);
          ft.fold.assign(n, static_cast<int>(k));
          ft.phase.resize(n);
          for (std::size_t t = 0; t < n; ++t) {
            ft.phase[t] = fr.fold.test_range.contains(t) ? "validation" : "calibration";
          }
          {
            auto f = open_out(out_dir / "fold_timeseries" / (fold_tag(id, k) + ".csv"));
            write_timeseries_csv(f, ft);
          }
          save_model(out_dir / "models" / (fold_tag(id, k) + ".lstm"),
                     SavedModel{fr.training.params, fr.scaler, cfg.train.seq_len, ps.dataset.feature_names});
          write_history(out_dir / "training" / (fold_tag(id, k) + ".csv"), fr.training);

          json fj;
          fj["fold"] = k;
          fj["seed"] = fr.seed;
          fj["test_range"] = range_json(fr.fold.test_range);
          json cal = json::array();
          for (const auto& cr : fr.fold.calibration_ranges) {
            cal.push_back(range_json(cr));
          }
          fj["calibration_ranges"] = cal;
          fj["train_indices"] = fr.fold.train_indices.empty()
                                    ? json()
                                    : json::array({fr.fold.train_indices.front(), fr.fold.train_indices.back() + 1});
          fj["cal_val_indices"] =
              fr.fold.cal_val_indices.empty()
                  ? json()
                  : json::array({fr.fold.cal_val_indices.front(), fr.fold.cal_val_indices.back() + 1});
          fj["train_count"] = fr.fold.train_indices.size();
          fj["cal_val_count"] = fr.fold.cal_val_indices.size();
          fj["train_windows"] = fr.train_windows;
          fj["cal_val_windows"] = fr.cal_val_windows;
          fj["final_train_loss"] = fr.training.history.back().train;
          fj["final_validation_loss"] =
              fr.training.history.back().validation ? json(*fr.training.history.back().validation) : json();
          folds_json.push_back(fj);
        }
        sj["folds"] = folds_json;
        sj["start"] = format_timestamp(ps.dataset.start);
        sj["length"] = ps.dataset.length();
      } catch (const Error& e) {
        outcome.ok = false;
        outcome.error = "station " + id + ": " + e.what();
        outcome.error_kind = e.kind();
        spdlog::error("{}", outcome.error);
      }
    }
    if (prepared[s]) {
      json inputs = json::array();
      for (const auto& in : prepared[s]->inputs) {
        inputs.push_back({{"product", in.product},
                          {"path", in.path},
                          {"sha256", in.sha256},
                          {"step_minutes", in.step_minutes},
                          {"gaps", gaps_json(in.gaps)},
                          {"warnings", in.warnings}});
      }
      sj["inputs"] = inputs;
    }
    sj["status"] = outcome.ok ? "ok" : "failed";
    if (!outcome.ok) {
      sj["error"] = outcome.error;
    }
    stations_json.push_back(sj);
  }

  emit_metrics_table(out_dir, all_reports);

  std::vector<std::string> failures;
  int worst = kExitOk;
  for (const auto& o : summary.stations) {
    if (!o.ok) {
      failures.push_back(o.error);
      worst = std::max(worst, exit_code_for(o.error_kind));
    }
  }
  if (!failures.empty()) {
    auto f = open_out(out_dir / "PARTIAL");
    f << "incomplete run; failed stations:\n";
    for (const auto& e : failures) {
      f << e << '\n';
    }
  }

  json manifest;
  manifest["software"] = {{"name", "qpe-merge"}, {"version", kVersion}};
  manifest["config"] = json::parse(config_snapshot(cfg));
  manifest["seed_derivation"] = "splitmix64(seed ^ (station_index << 32) ^ fold_index)";
  manifest["stations"] = stations_json;
  manifest["complete"] = failures.empty();
  json outputs = json::object();
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
    if (entry.is_regular_file()) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    const auto rel = fs::relative(p, out_dir).generic_string();
    if (rel == "manifest.json" || rel == kOutputMarker) {
      continue;
    }
    outputs[rel] = sha256_file(p);
  }
  manifest["outputs"] = outputs;
  {
    auto f = open_out(out_dir / "manifest.json");
    f << manifest.dump(2) << '\n';
  }

  summary.exit_code = worst;
  if (summary.exit_code == kExitOk && options.strict && summary.undefined_metric) {
    summary.exit_code = kExitData;
  }
  return summary;
}

}  // namespace qpemerge
