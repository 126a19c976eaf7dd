#include <string>

#include "doctest.h"
#include "qpemerge/config.hpp"
#include "qpemerge/error.hpp"

using namespace qpemerge;

namespace {

const char* kMinimal = R"({
  "stations": [
    {"id": "ANT", "name": "ANTELOPE LAKE", "elevation": 5020, "elevation_unit": "ft",
     "latitude": 40.18, "longitude": -120.6, "nearby_city": "TAYLORSVILLE",
     "files": {"imerg_e": "a_imerg.csv", "stage4": "a_st4.csv", "gauge": "/abs/a_gauge.csv", "mrms": "a_mrms.csv"}}
  ],
  "seed": 7
})";

std::string with(const std::string& extra) {
  std::string s = kMinimal;
  s.insert(s.rfind('}'), ", " + extra);
  return s;
}

}  // namespace

TEST_CASE("defaults and path resolution") {
  const auto cfg = parse_config(kMinimal, "/data/run");
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.features == std::vector<std::string>{"imerg_e", "stage4"});
  CHECK(cfg.target == "gauge");
  CHECK(cfg.folds == 3);
  CHECK(cfg.calibration_ratio == 0.7);
  CHECK(cfg.threshold == 0.1);
  CHECK(cfg.seed == 7);
  CHECK(cfg.jobs == 1);
  CHECK(cfg.train.hidden == 12);
  CHECK(cfg.train.seq_len == 12);
  CHECK(cfg.train.learning_rate == 0.001);
  CHECK(cfg.train.epochs == 100);
  CHECK(cfg.train.batch_size == 32);
  CHECK(cfg.stations[0].meta.elevation.unit == "ft");
  CHECK(cfg.resolve("a_imerg.csv") == std::filesystem::path("/data/run/a_imerg.csv"));
  CHECK(cfg.resolve("/abs/a_gauge.csv") == std::filesystem::path("/abs/a_gauge.csv"));
  CHECK(cfg.comparison_products(cfg.stations[0]) == std::vector<std::string>{"mrms"});
  CHECK(cfg.output_dir == std::filesystem::path("/data/run/qpe-merge-out"));
}

TEST_CASE("train block overrides") {
  const auto cfg = parse_config(with(R"("train": {"hidden": 4, "epochs": 3, "init_scale": 0.2})"), ".");
  CHECK(cfg.train.hidden == 4);
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.train.init_scale == 0.2);
  CHECK(cfg.train.seq_len == 12);
}

TEST_CASE("malformed or inconsistent configs are usage errors") {
  CHECK_THROWS_AS(parse_config("{", "."), UsageError);
  CHECK_THROWS_AS(parse_config(with(R"("epochs": 5)"), "."), UsageError);
  CHECK_THROWS_AS(parse_config(with(R"("train": {"hiden": 5})"), "."), UsageError);
  CHECK_THROWS_AS(parse_config(with(R"("folds": "three")"), "."), UsageError);
  CHECK_THROWS_AS(parse_config(with(R"("features": ["imerg_e", "radar"])"), ".").validate(), UsageError);
  CHECK_THROWS_AS(parse_config(with(R"("features": ["gauge"])"), ".").validate(), UsageError);
  CHECK_THROWS_AS(parse_config(with(R"("folds": 1)"), ".").validate(), UsageError);
  CHECK_THROWS_AS(parse_config(with(R"("comparisons": ["merged"])"), ".").validate(), UsageError);
  CHECK_THROWS_AS(parse_config(with(R"("train": {"learning_rate": -1})"), ".").validate(), UsageError);
  CHECK_THROWS_AS(parse_config(R"({"stations": []})", ".").validate(), UsageError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), UsageError);
}

TEST_CASE("bad station metadata is a data error") {
  std::string s = kMinimal;
  s.replace(s.find("40.18"), 5, "140.1");
  CHECK_THROWS_AS(parse_config(s, ".").validate(), DataError);
}

TEST_CASE("snapshot excludes run-placement settings") {
  auto a = parse_config(with(R"("jobs": 4, "output_dir": "x")"), "/one");
  auto b = parse_config(with(R"("jobs": 1, "output_dir": "y")"), "/one");
  CHECK(config_snapshot(a) == config_snapshot(b));
  CHECK(config_snapshot(a).find("output_dir") == std::string::npos);
  b.seed = 8;
  CHECK(config_snapshot(a) != config_snapshot(b));
}
