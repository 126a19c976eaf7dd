#include "qpemerge/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "qpemerge/error.hpp"
#include "qpemerge/ingest.hpp"

namespace qpemerge {
namespace {

constexpr const char* kMagic = "qpe-merge-lstm";
constexpr const char* kWeightNames[] = {"W_f", "W_i", "W_c", "W_o"};
constexpr const char* kBiasNames[] = {"b_f", "b_i", "b_c", "b_o"};

void write_line(std::ostream& out, const char* key, std::span<const double> values) {
  out << key;
  for (double v : values) {
    out << ' ' << format_value(v);
  }
  out << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream expect(const std::string& key) {
    std::string line;
    if (!std::getline(in_, line)) {
      throw DataError("model file truncated before '" + key + "'");
    }
    std::istringstream ss(line);
    std::string got;
    ss >> got;
    if (got != key) {
      throw DataError("model file: expected '" + key + "', found '" + got + "'");
    }
    return ss;
  }

  std::size_t count(const std::string& key) {
    auto ss = expect(key);
    std::size_t v = 0;
    if (!(ss >> v)) {
      throw DataError("model file: bad value for '" + key + "'");
    }
    return v;
  }

  std::vector<double> values(const std::string& key, std::size_t n) {
    auto ss = expect(key);
    std::vector<double> out;
    out.reserve(n);
    std::string tok;
    while (ss >> tok) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw DataError("model file: bad number '" + tok + "' in '" + key + "'");
      }
      out.push_back(v);
    }
    if (out.size() != n) {
      throw DataError("model file: '" + key + "' has " + std::to_string(out.size()) + " values, expected " +
                      std::to_string(n));
    }
    return out;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_model(std::ostream& out, const SavedModel& model) {
  const auto& shape = model.params.shape();
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  out << "input_dim " << shape.input_dim << '\n';
  out << "hidden " << shape.hidden << '\n';
  out << "seq_len " << model.seq_len << '\n';
  out << "feature_names";
  for (const auto& n : model.feature_names) {
    out << ' ' << n;
  }
  out << '\n';
  write_line(out, "feature_mean", model.scaler.feature_mean);
  write_line(out, "feature_std", model.scaler.feature_std);
  const double tm[] = {model.scaler.target_mean};
  const double ts[] = {model.scaler.target_std};
  write_line(out, "target_mean", tm);
  write_line(out, "target_std", ts);
  for (std::size_t g = 0; g < kGateCount; ++g) {
    write_line(out, kWeightNames[g], model.params.weights(static_cast<Gate>(g)));
  }
  for (std::size_t g = 0; g < kGateCount; ++g) {
    write_line(out, kBiasNames[g], model.params.bias(static_cast<Gate>(g)));
  }
  write_line(out, "w_y", model.params.head_weights());
  const double by[] = {model.params.head_bias()};
  write_line(out, "b_y", by);
}

void save_model(const std::filesystem::path& file, const SavedModel& model) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + file.string());
  }
  save_model(out, model);
}

SavedModel load_model(std::istream& in) {
  LineReader r(in);
  {
    auto ss = r.expect(kMagic);
    int version = 0;
    if (!(ss >> version) || version != kModelFormatVersion) {
      throw DataError("unsupported model format version");
    }
  }
  SavedModel m;
  const std::size_t d = r.count("input_dim");
  const std::size_t h = r.count("hidden");
  m.seq_len = r.count("seq_len");
  if (d == 0 || h == 0 || m.seq_len == 0) {
    throw DataError("model file: dimensions must be positive");
  }
  {
    auto ss = r.expect("feature_names");
    std::string name;
    while (ss >> name) {
      m.feature_names.push_back(name);
    }
    if (m.feature_names.size() != d) {
      throw DataError("model file: feature_names does not match input_dim");
    }
  }
  m.scaler.feature_mean = r.values("feature_mean", d);
  m.scaler.feature_std = r.values("feature_std", d);
  m.scaler.target_mean = r.values("target_mean", 1)[0];
  m.scaler.target_std = r.values("target_std", 1)[0];
  m.params = LstmParams(LstmShape{d, h});
  const LstmShape& shape = m.params.shape();
  for (std::size_t g = 0; g < kGateCount; ++g) {
    const auto v = r.values(kWeightNames[g], shape.gate_weight_count());
    std::copy(v.begin(), v.end(), m.params.weights(static_cast<Gate>(g)).begin());
  }
  for (std::size_t g = 0; g < kGateCount; ++g) {
    const auto v = r.values(kBiasNames[g], h);
    std::copy(v.begin(), v.end(), m.params.bias(static_cast<Gate>(g)).begin());
  }
  const auto wy = r.values("w_y", h);
  std::copy(wy.begin(), wy.end(), m.params.head_weights().begin());
  m.params.head_bias() = r.values("b_y", 1)[0];
  return m;
}

SavedModel load_model(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + file.string());
  }
  return load_model(in);
}

}  // namespace qpemerge
