/**
 * @file pipeline.hpp
 * @brief End-to-end run: ingest, fold, train, predict, stitch, score, report.
 *
 * Output tree under the configured directory:
 *
 *     manifest.json                 config snapshot, seeds, folds, checksums, gaps
 *     metrics.csv / metrics.txt     one block per station, CC/RMSE/RB/POD/FAR
 *     metrics_detail.csv            full precision, contingency counts
 *     timeseries/<ST>.csv           stitched held-out series with every product
 *     fold_timeseries/<ST>_fold<k>.csv   one fold's model over the whole period
 *     scatter/<ST>_<product>.csv    log10 points in [-2, 2]
 *     models/<ST>_fold<k>.lstm      trained weights and scaler
 *     training/<ST>_fold<k>.csv     per-epoch losses
 *     PARTIAL                       present only if some station failed
 */
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qpemerge/config.hpp"
#include "qpemerge/error.hpp"
#include "qpemerge/folds.hpp"
#include "qpemerge/ingest.hpp"
#include "qpemerge/metrics.hpp"
#include "qpemerge/scaler.hpp"
#include "qpemerge/trainer.hpp"

namespace qpemerge {

/// Exit statuses of the command line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

int exit_code_for(ErrorKind kind);

struct InputRecord {
  std::string product;
  std::string path;
  std::string sha256;
  int step_minutes{};
  GapStats gaps;
  std::vector<std::string> warnings;
};

/// One station's inputs after parsing, aggregation, gap filling and alignment.
struct PreparedStation {
  std::size_t index{};
  StationMeta meta;
  AlignedDataset dataset;
  TimeSeries gauge;
  /// Feature series then comparison series, all trimmed to the dataset span.
  std::vector<TimeSeries> products;
  std::vector<InputRecord> inputs;
};

/// Throws DataError naming the station and product on any input problem.
PreparedStation prepare_station(const RunConfig& cfg, std::size_t station_index);

struct FoldRun {
  FoldSpec fold;
  std::uint64_t seed{};
  Scaler scaler;
  TrainResult training;
  std::size_t train_windows{};
  std::size_t cal_val_windows{};
  /// Held-out block predictions.
  TimeSeries test_prediction;
  /// The fold's model over the full period, each contiguous range predicted
  /// separately with its own warm-up.
  TimeSeries full_prediction;
};

FoldRun run_fold(const PreparedStation& station, const FoldSpec& fold, const RunConfig& cfg, std::uint64_t seed);

struct RunOptions {
  bool overwrite{false};
  bool strict{false};
};

struct StationOutcome {
  std::string station_id;
  bool ok{false};
  std::string error;
  ErrorKind error_kind{ErrorKind::Data};
  std::vector<MetricsReport> reports;
};

struct RunSummary {
  std::vector<StationOutcome> stations;
  bool undefined_metric{false};
  int exit_code{kExitOk};
};

/**
 * @brief Runs every station and writes the output tree.
 *
 * Station x fold training jobs run on `cfg.jobs` threads; results are
 * reduced in (station, fold) order, so the output does not depend on the
 * job count. Throws UsageError if the output directory exists, is not empty,
 * and `options.overwrite` is false. Per-station failures are reported in the
 * summary rather than thrown.
 */
RunSummary run_pipeline(const RunConfig& cfg, const RunOptions& options);

}  // namespace qpemerge
