/**
 * @file config.hpp
 * @brief Run configuration loaded from one JSON file.
 *
 * Relative input paths are resolved against the directory of the config
 * file. Unknown keys are rejected so typos do not pass silently.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qpemerge/trainer.hpp"
#include "qpemerge/types.hpp"

namespace qpemerge {

struct StationInputs {
  StationMeta meta;
  /// product name -> path as written in the config.
  std::map<std::string, std::string> files;
};

struct RunConfig {
  std::vector<StationInputs> stations;
  std::vector<std::string> features{"imerg_e", "stage4"};
  std::string target{"gauge"};
  /// Products scored against the gauge but not fed to the model. Defaults to
  /// every product with an input file that is neither a feature nor the target.
  std::vector<std::string> comparisons;
  TrainConfig train;
  std::size_t folds{3};
  double calibration_ratio{0.7};
  double threshold{0.1};
  std::filesystem::path output_dir{"qpe-merge-out"};
  std::uint64_t seed{0};
  std::size_t jobs{1};
  /// Directory relative input paths are resolved against.
  std::filesystem::path base_dir{"."};

  [[nodiscard]] std::filesystem::path resolve(const std::string& path) const;
  /// Comparison products for one station (explicit list or the default rule).
  [[nodiscard]] std::vector<std::string> comparison_products(const StationInputs& station) const;
  /// Throws UsageError on a structurally invalid config and DataError on bad station metadata.
  void validate() const;
};

/// Throws UsageError for unreadable or malformed JSON.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& file);

/// Canonical JSON of every setting that affects results (excludes output_dir
/// and jobs). Keys are sorted.
std::string config_snapshot(const RunConfig& cfg);

}  // namespace qpemerge
