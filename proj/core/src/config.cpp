#include "qpemerge/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qpemerge/error.hpp"

namespace qpemerge {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw UsageError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    out = obj.at(key).get<T>();
  }
}

StationInputs parse_station(const json& j) {
  reject_unknown(j, {"id", "name", "elevation", "elevation_unit", "latitude", "longitude", "nearby_city", "files"},
                 "station");
  StationInputs s;
  s.meta.id = j.at("id").get<std::string>();
  read_opt(j, "name", s.meta.name);
  read_opt(j, "elevation", s.meta.elevation.value);
  read_opt(j, "elevation_unit", s.meta.elevation.unit);
  read_opt(j, "latitude", s.meta.latitude);
  read_opt(j, "longitude", s.meta.longitude);
  read_opt(j, "nearby_city", s.meta.nearby_city);
  for (const auto& [product, path] : j.at("files").items()) {
    s.files[product] = path.get<std::string>();
  }
  return s;
}

}  // namespace

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<std::string> RunConfig::comparison_products(const StationInputs& station) const {
  if (!comparisons.empty()) {
    return comparisons;
  }
  std::vector<std::string> out;
  for (const auto& [product, path] : station.files) {
    if (product != target && std::find(features.begin(), features.end(), product) == features.end()) {
      out.push_back(product);
    }
  }
  return out;
}

void RunConfig::validate() const {
  if (stations.empty()) {
    throw UsageError("config: no stations");
  }
  if (features.empty()) {
    throw UsageError("config: at least one feature product is required");
  }
  if (std::set<std::string>(features.begin(), features.end()).size() != features.size()) {
    throw UsageError("config: duplicate feature product");
  }
  if (std::find(features.begin(), features.end(), target) != features.end()) {
    throw UsageError("config: the target product cannot also be a feature");
  }
  if (folds < 2) {
    throw UsageError("config: folds must be at least 2");
  }
  if (!(calibration_ratio > 0.0 && calibration_ratio <= 1.0)) {
    throw UsageError("config: calibration_ratio must lie in (0, 1]");
  }
  if (!(threshold >= 0.0)) {
    throw UsageError("config: threshold must be non-negative");
  }
  if (jobs == 0) {
    throw UsageError("config: jobs must be at least 1");
  }
  train.validate();
  std::vector<StationMeta> metas;
  for (const auto& s : stations) {
    metas.push_back(s.meta);
    for (const auto& f : features) {
      if (!s.files.contains(f)) {
        throw UsageError("config: station " + s.meta.id + " has no file for feature product '" + f + "'");
      }
    }
    if (!s.files.contains(target)) {
      throw UsageError("config: station " + s.meta.id + " has no file for target product '" + target + "'");
    }
    for (const auto& c : comparison_products(s)) {
      if (!s.files.contains(c)) {
        throw UsageError("config: station " + s.meta.id + " has no file for comparison product '" + c + "'");
      }
      if (c == "merged") {
        throw UsageError("config: 'merged' is reserved for the model output");
      }
    }
  }
  validate_station_set(metas);
}

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  try {
    const json j = json::parse(json_text);
    reject_unknown(j, {"stations", "features", "target", "comparisons", "train", "folds", "calibration_ratio",
                       "threshold", "output_dir", "seed", "jobs"},
                   "top level");
    for (const auto& s : j.at("stations")) {
      cfg.stations.push_back(parse_station(s));
    }
    read_opt(j, "features", cfg.features);
    read_opt(j, "target", cfg.target);
    read_opt(j, "comparisons", cfg.comparisons);
    read_opt(j, "folds", cfg.folds);
    read_opt(j, "calibration_ratio", cfg.calibration_ratio);
    read_opt(j, "threshold", cfg.threshold);
    read_opt(j, "seed", cfg.seed);
    read_opt(j, "jobs", cfg.jobs);
    if (j.contains("output_dir")) {
      cfg.output_dir = cfg.resolve(j.at("output_dir").get<std::string>());
    } else {
      cfg.output_dir = base_dir / cfg.output_dir;
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      reject_unknown(t, {"hidden", "seq_len", "learning_rate", "epochs", "batch_size", "init_scale",
                         "forget_bias_init", "beta1", "beta2", "eps_adam"},
                     "train");
      read_opt(t, "hidden", cfg.train.hidden);
      read_opt(t, "seq_len", cfg.train.seq_len);
      read_opt(t, "learning_rate", cfg.train.learning_rate);
      read_opt(t, "epochs", cfg.train.epochs);
      read_opt(t, "batch_size", cfg.train.batch_size);
      if (t.contains("init_scale") && !t.at("init_scale").is_null()) {
        cfg.train.init_scale = t.at("init_scale").get<double>();
      }
      read_opt(t, "forget_bias_init", cfg.train.forget_bias_init);
      read_opt(t, "beta1", cfg.train.beta1);
      read_opt(t, "beta2", cfg.train.beta2);
      read_opt(t, "eps_adam", cfg.train.eps_adam);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw UsageError("cannot read config " + file.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  auto parent = file.parent_path();
  if (parent.empty()) {
    parent = ".";
  }
  return parse_config(ss.str(), parent);
}

std::string config_snapshot(const RunConfig& cfg) {
  json j;
  json stations = json::array();
  for (const auto& s : cfg.stations) {
    json st;
    st["id"] = s.meta.id;
    st["name"] = s.meta.name;
    st["elevation"] = s.meta.elevation.value;
    st["elevation_unit"] = s.meta.elevation.unit;
    st["latitude"] = s.meta.latitude;
    st["longitude"] = s.meta.longitude;
    st["nearby_city"] = s.meta.nearby_city;
    st["files"] = s.files;
    stations.push_back(st);
  }
  j["stations"] = stations;
  j["features"] = cfg.features;
  j["target"] = cfg.target;
  j["comparisons"] = cfg.comparisons;
  j["folds"] = cfg.folds;
  j["calibration_ratio"] = cfg.calibration_ratio;
  j["threshold"] = cfg.threshold;
  j["seed"] = cfg.seed;
  json t;
  t["hidden"] = cfg.train.hidden;
  t["seq_len"] = cfg.train.seq_len;
  t["learning_rate"] = cfg.train.learning_rate;
  t["epochs"] = cfg.train.epochs;
  t["batch_size"] = cfg.train.batch_size;
  t["init_scale"] = cfg.train.effective_init_scale();
  t["forget_bias_init"] = cfg.train.forget_bias_init;
  t["beta1"] = cfg.train.beta1;
  t["beta2"] = cfg.train.beta2;
  t["eps_adam"] = cfg.train.eps_adam;
  j["train"] = t;
  return j.dump(2);
}

}  // namespace qpemerge
