/**
 * @file model_io.hpp
 * @brief Versioned text format for a trained model and its scaler.
 *
 *     qpe-merge-lstm 1
 *     input_dim <D>
 *     hidden <H>
 *     seq_len <L>
 *     feature_names <name> ...
 *     feature_mean <D values>
 *     feature_std <D values>
 *     target_mean <value>
 *     target_std <value>
 *     W_f <H*(D+H) values, row-major>
 *     W_i ...
 *     W_c ...
 *     W_o ...
 *     b_f <H values>
 *     b_i ...
 *     b_c ...
 *     b_o ...
 *     w_y <H values>
 *     b_y <value>
 *
 * Values are written in shortest round-trip decimal form, so save then load
 * reproduces every bit.
 */
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qpemerge/lstm.hpp"
#include "qpemerge/scaler.hpp"

namespace qpemerge {

inline constexpr int kModelFormatVersion = 1;

struct SavedModel {
  LstmParams params;
  Scaler scaler;
  std::size_t seq_len{};
  std::vector<std::string> feature_names;
};

void save_model(std::ostream& out, const SavedModel& model);
void save_model(const std::filesystem::path& file, const SavedModel& model);
/// Throws DataError on a malformed file or an unsupported version.
SavedModel load_model(std::istream& in);
SavedModel load_model(const std::filesystem::path& file);

}  // namespace qpemerge
