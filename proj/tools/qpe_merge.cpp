// qpe-merge: gauge-supervised LSTM merging of precipitation products.
//
//   qpe-merge run --config run.json [--seed N] [--threshold X] [--jobs K] [--overwrite] [--strict]
//   qpe-merge ingest-check --config run.json
//   qpe-merge train --config run.json --station ANT --fold 1 --model out.lstm
//   qpe-merge evaluate --timeseries out/timeseries/ANT.csv
//   qpe-merge render --timeseries out/timeseries/ANT.csv --svg ANT.svg
//
// Exit status: 0 ok, 1 usage, 2 data error, 3 numeric failure.
// Log verbosity comes from $QPE_MERGE_LOG (trace..off, default warn).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qpemerge/config.hpp"
#include "qpemerge/error.hpp"
#include "qpemerge/folds.hpp"
#include "qpemerge/logging.hpp"
#include "qpemerge/model_io.hpp"
#include "qpemerge/pipeline.hpp"
#include "qpemerge/report.hpp"
#include "qpemerge/rng.hpp"
#include "qpemerge/version.hpp"

namespace fs = std::filesystem;
using namespace qpemerge;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<std::size_t> jobs;
  std::optional<std::string> output;
};

RunConfig load_with_overrides(const std::string& path, const Overrides& o) {
  RunConfig cfg = load_config(path);
  if (o.seed) {
    cfg.seed = *o.seed;
  }
  if (o.threshold) {
    cfg.threshold = *o.threshold;
  }
  if (o.jobs) {
    cfg.jobs = *o.jobs;
  }
  if (o.output) {
    cfg.output_dir = *o.output;
  }
  cfg.validate();
  return cfg;
}

std::size_t station_index(const RunConfig& cfg, const std::string& id) {
  for (std::size_t i = 0; i < cfg.stations.size(); ++i) {
    if (cfg.stations[i].meta.id == id) {
      return i;
    }
  }
  throw UsageError("station '" + id + "' is not in the config");
}

int cmd_run(const std::string& config, const Overrides& o, bool overwrite, bool strict) {
  const RunConfig cfg = load_with_overrides(config, o);
  const auto summary = run_pipeline(cfg, {overwrite, strict});
  for (const auto& st : summary.stations) {
    if (!st.ok) {
      std::cerr << "qpe-merge: " << st.error << '\n';
    }
  }
  if (summary.undefined_metric) {
    std::cerr << "qpe-merge: some metrics are undefined (see metrics_detail.csv)\n";
  }
  std::cout << "wrote " << cfg.output_dir.string() << '\n';
  return summary.exit_code;
}

int cmd_ingest_check(const std::string& config) {
  const RunConfig cfg = load_config(config);
  cfg.validate();
  int status = kExitOk;
  for (std::size_t s = 0; s < cfg.stations.size(); ++s) {
    try {
      const auto ps = prepare_station(cfg, s);
      for (const auto& in : ps.inputs) {
        std::cout << ps.meta.id << ' ' << in.product << ": step " << in.step_minutes << " min, " << in.gaps.length
                  << " hours, " << in.gaps.missing << " missing in " << in.gaps.gap_count << " gap(s), longest "
                  << in.gaps.longest_gap << '\n';
        for (const auto& w : in.warnings) {
          std::cout << "  warning: " << w << '\n';
        }
      }
      std::cout << ps.meta.id << ": " << ps.dataset.length() << " aligned hours from "
                << format_timestamp(ps.dataset.start) << '\n';
    } catch (const Error& e) {
      std::cerr << "qpe-merge: " << e.what() << '\n';
      status = std::max(status, exit_code_for(e.kind()));
    }
  }
  return status;
}

int cmd_train(const std::string& config, const Overrides& o, const std::string& station, std::size_t fold,
              const std::string& model_path) {
  const RunConfig cfg = load_with_overrides(config, o);
  const std::size_t s = station_index(cfg, station);
  const auto ps = prepare_station(cfg, s);
  const auto folds =
      make_folds(ps.dataset.length(), cfg.folds, FoldOptions{cfg.train.seq_len, cfg.calibration_ratio});
  if (fold >= folds.size()) {
    throw UsageError("fold must be below " + std::to_string(folds.size()));
  }
  const auto run = run_fold(ps, folds[fold], cfg, derive_seed(cfg.seed, s, fold));
  save_model(fs::path(model_path), SavedModel{run.training.params, run.scaler, cfg.train.seq_len,
                                                ps.dataset.feature_names});
  std::cout << "epoch,train_loss,validation_loss\n";
  for (std::size_t e = 0; e < run.training.history.size(); ++e) {
    const auto& h = run.training.history[e];
    std::cout << e + 1 << ',' << format_value(h.train) << ','
              << (h.validation ? format_value(*h.validation) : std::string("NA")) << '\n';
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& timeseries, double threshold, bool csv) {
  const auto table = read_timeseries_csv(fs::path(timeseries));
  if (table.columns.size() < 2) {
    throw DataError(timeseries + ": needs a gauge column and at least one product");
  }
  const TimeSeries& gauge = table.columns.front();
  std::vector<TimeSeries> products(table.columns.begin() + 1, table.columns.end());
  for (auto& p : products) {
    p.station_id = gauge.station_id;
  }
  const auto reports = evaluate_products(products, gauge, threshold);
  if (csv) {
    write_metrics_csv(std::cout, reports);
  } else {
    write_metrics_text(std::cout, reports);
  }
  return kExitOk;
}

int cmd_render(const std::string& timeseries, const std::string& scatter, const std::string& svg) {
  std::ofstream out(svg, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + svg);
  }
  if (!timeseries.empty()) {
    render_timeseries_svg(out, read_timeseries_csv(fs::path(timeseries)));
  } else {
    std::ifstream in(scatter, std::ios::binary);
    if (!in) {
      throw DataError("cannot open " + scatter);
    }
    render_scatter_svg(out, read_scatter_csv(in), fs::path(scatter).stem().string());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging_from_env();

  CLI::App app{"Merge satellite and radar precipitation products with a gauge-trained LSTM"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config;
  Overrides o;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { o.seed = v; }, "Global seed");
    sub->add_option_function<double>("--threshold", [&](const double& v) { o.threshold = v; },
                                     "Event threshold in mm/h");
    sub->add_option_function<std::size_t>("--jobs", [&](const std::size_t& v) { o.jobs = v; },
                                          "Worker threads for station x fold jobs")
        ->check(CLI::PositiveNumber);
    sub->add_option_function<std::string>("--output", [&](const std::string& v) { o.output = v; },
                                           "Output directory (overrides the config)");
  };

  auto* run = app.add_subcommand("run", "Full pipeline: ingest, cross-validate, evaluate, report");
  bool overwrite = false;
  bool strict = false;
  run->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  add_overrides(run);
  run->add_flag("--overwrite", overwrite, "Replace an earlier qpe-merge output directory");
  run->add_flag("--strict", strict, "Exit with status 2 when any metric is undefined");

  auto* check = app.add_subcommand("ingest-check", "Parse and align every configured input file");
  check->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Train one station/fold model");
  std::string station;
  std::size_t fold = 0;
  std::string model_path;
  train->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  add_overrides(train);
  train->add_option("--station", station, "Station id")->required();
  train->add_option("--fold", fold, "0-based fold index")->required();
  train->add_option("--model", model_path, "Where to write the trained model")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score every product column of a time-series file");
  std::string timeseries;
  double threshold = kDefaultEventThreshold;
  bool csv = false;
  evaluate->add_option("--timeseries", timeseries, "timeseries/<ST>.csv from a run")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--threshold", threshold, "Event threshold in mm/h");
  evaluate->add_flag("--csv", csv, "CSV instead of the aligned text table");

  auto* render = app.add_subcommand("render", "SVG plot of a time-series or scatter file");
  std::string scatter;
  std::string svg;
  auto* ts_opt = render->add_option("--timeseries", timeseries, "Time-series CSV")->check(CLI::ExistingFile);
  auto* sc_opt = render->add_option("--scatter", scatter, "Scatter CSV")->check(CLI::ExistingFile);
  ts_opt->excludes(sc_opt);
  render->add_option("--svg", svg, "Output SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      return cmd_run(config, o, overwrite, strict);
    }
    if (*check) {
      return cmd_ingest_check(config);
    }
    if (*train) {
      return cmd_train(config, o, station, fold, model_path);
    }
    if (*evaluate) {
      return cmd_evaluate(timeseries, threshold, csv);
    }
    if (*render) {
      if (timeseries.empty() && scatter.empty()) {
        throw UsageError("render needs --timeseries or --scatter");
      }
      return cmd_render(timeseries, scatter, svg);
    }
  } catch (const Error& e) {
    std::cerr << "qpe-merge: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "qpe-merge: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
