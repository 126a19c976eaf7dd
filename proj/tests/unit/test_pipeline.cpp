#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "qpemerge/error.hpp"
#include "qpemerge/pipeline.hpp"
#include "qpemerge/report.hpp"
#include "synthetic.hpp"
#include "tree.hpp"

using namespace qpemerge;
namespace fs = std::filesystem;

namespace {

const char* kFastTrain = R"({"hidden": 4, "seq_len": 6, "epochs": 3, "batch_size": 16})";

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::current_path() / "pipeline_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

synthetic::Options small_options() {
  synthetic::Options opt;
  opt.hours = 300;
  opt.gaps = 4;
  return opt;
}

RunConfig small_run(const fs::path& dir, std::vector<std::string> stations = {"ANT", "BKL"}) {
  return load_config(synthetic::write_run(dir, stations, small_options(), kFastTrain, 11));
}

}  // namespace

TEST_CASE("prepare_station aggregates, fills and aligns") {
  const auto cfg = small_run(fresh_dir("prepare"));
  const auto ps = prepare_station(cfg, 0);
  CHECK(ps.meta.id == "ANT");
  CHECK(ps.dataset.length() == 300);
  CHECK(ps.dataset.feature_names == std::vector<std::string>{"imerg_e", "stage4"});
  REQUIRE(ps.products.size() == 3);
  CHECK(ps.products[2].product.name() == "mrms");
  REQUIRE(ps.inputs.size() == 4);
  CHECK(ps.inputs[0].product == "imerg_e");
  CHECK(ps.inputs[0].step_minutes == 30);
  CHECK(ps.inputs[0].gaps.missing == 4);
  CHECK(ps.inputs[0].sha256.size() == 64);
  for (const auto& p : ps.products) {
    CHECK(p.missing_count() == 0);
  }
}

TEST_CASE("full run writes the documented tree") {
  const auto dir = fresh_dir("tree");
  const auto cfg = small_run(dir);
  const auto summary = run_pipeline(cfg, {});
  CHECK(summary.exit_code == kExitOk);
  REQUIRE(summary.stations.size() == 2);
  CHECK(summary.stations[0].ok);
  CHECK(summary.stations[0].reports.size() == 4);

  const fs::path out = dir / "out";
  CHECK(fs::exists(out / ".qpe-merge-output"));
  CHECK_FALSE(fs::exists(out / "PARTIAL"));
  for (const char* f : {"manifest.json", "metrics.csv", "metrics.txt", "metrics_detail.csv", "timeseries/ANT.csv",
                        "timeseries/BKL.csv", "scatter/ANT_merged.csv", "scatter/ANT_imerg_e.csv",
                        "scatter/BKL_stage4.csv", "scatter/BKL_mrms.csv", "models/ANT_fold0.lstm",
                        "models/BKL_fold2.lstm", "training/ANT_fold1.csv", "fold_timeseries/BKL_fold1.csv"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }

  const auto table = read_timeseries_csv(out / "timeseries" / "ANT.csv");
  REQUIRE(table.columns.size() == 5);
  CHECK(table.columns.front().product.name() == "gauge");
  CHECK(table.columns.back().product.name() == "merged");
  CHECK(table.columns.back().missing_count() == 3 * 5);
  CHECK(table.phase[0] == "warmup");
  CHECK(table.phase[5] == "validation");
  CHECK(table.phase[100] == "warmup");
  CHECK(table.fold[99] == 0);
  CHECK(table.fold[100] == 1);

  const auto manifest = nlohmann::json::parse(testing::slurp(out / "manifest.json"));
  CHECK(manifest["complete"] == true);
  CHECK(manifest["config"]["seed"] == 11);
  CHECK_FALSE(manifest["config"].contains("output_dir"));
  const auto& ant = manifest["stations"][0];
  CHECK(ant["folds"].size() == 3);
  CHECK(ant["folds"][1]["test_range"] == nlohmann::json::array({100, 200}));
  CHECK(ant["inputs"].size() == 4);
  for (const auto& in : ant["inputs"]) {
    const auto path = dir / in["path"].get<std::string>();
    CHECK(in["sha256"] == sha256_file(path));
  }
  CHECK(manifest["outputs"]["metrics.csv"] == sha256_file(out / "metrics.csv"));
  CHECK(manifest["outputs"].size() == testing::read_tree(out).size() - 2);
}

TEST_CASE("worker count does not change a single byte") {
  const auto a_dir = fresh_dir("jobs1");
  const auto b_dir = fresh_dir("jobs3");
  auto a = small_run(a_dir);
  auto b = small_run(b_dir);
  b.jobs = 3;
  REQUIRE(run_pipeline(a, {}).exit_code == kExitOk);
  REQUIRE(run_pipeline(b, {}).exit_code == kExitOk);
  CHECK(testing::first_difference(testing::read_tree(a_dir / "out"), testing::read_tree(b_dir / "out")) == "");
}

TEST_CASE("existing output is protected") {
  const auto dir = fresh_dir("overwrite");
  const auto cfg = small_run(dir, {"ANT"});
  REQUIRE(run_pipeline(cfg, {}).exit_code == kExitOk);
  CHECK_THROWS_AS(run_pipeline(cfg, {}), UsageError);
  CHECK(run_pipeline(cfg, {.overwrite = true}).exit_code == kExitOk);

  auto foreign = cfg;
  foreign.output_dir = dir / "foreign";
  fs::create_directories(foreign.output_dir);
  {
    std::ofstream(foreign.output_dir / "keep.txt") << "mine";
  }
  CHECK_THROWS_AS(run_pipeline(foreign, {.overwrite = true}), UsageError);
  CHECK(fs::exists(foreign.output_dir / "keep.txt"));
}

TEST_CASE("a missing input names the station and product and marks the run partial") {
  const auto dir = fresh_dir("missing");
  const auto cfg = small_run(dir);
  fs::remove(dir / "data" / "BKL_stage4.csv");
  const auto summary = run_pipeline(cfg, {});
  CHECK(summary.exit_code == kExitData);
  CHECK(summary.stations[0].ok);
  CHECK_FALSE(summary.stations[1].ok);
  CHECK(summary.stations[1].error.find("BKL") != std::string::npos);
  CHECK(summary.stations[1].error.find("stage4") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "PARTIAL"));
  CHECK(fs::exists(dir / "out" / "timeseries" / "ANT.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "timeseries" / "BKL.csv"));
  CHECK_THROWS_WITH_AS(prepare_station(cfg, 1), doctest::Contains("station BKL product stage4"), DataError);
}

TEST_CASE("inputs for the wrong station are rejected") {
  const auto dir = fresh_dir("wrong_station");
  const auto cfg = small_run(dir);
  fs::copy_file(dir / "data" / "ANT_gauge.csv", dir / "data" / "BKL_gauge.csv",
                fs::copy_options::overwrite_existing);
  CHECK_THROWS_WITH_AS(prepare_station(cfg, 1), doctest::Contains("station BKL product gauge"), DataError);
}

TEST_CASE("strict mode turns undefined metrics into a data exit") {
  const auto dir = fresh_dir("strict");
  auto opt = small_options();
  opt.with_mrms = true;
  const auto path = synthetic::write_run(dir, {"ANT"}, opt, kFastTrain, 3);
  // A comparison product that never rains has no predicted events, so FAR is undefined.
  auto dry = make_series("ANT", Product::from_name("mrms"), synthetic::default_start(), std::vector<double>(300, 0.0));
  write_canonical(dir / "data" / "ANT_mrms.csv", dry);
  auto cfg = load_config(path);
  const auto lenient = run_pipeline(cfg, {});
  CHECK(lenient.undefined_metric);
  CHECK(lenient.exit_code == kExitOk);
  CHECK(testing::slurp(dir / "out" / "metrics.csv").find("undef") != std::string::npos);
  const auto strict = run_pipeline(cfg, {.overwrite = true, .strict = true});
  CHECK(strict.exit_code == kExitData);
}

TEST_CASE("exit codes follow the error kind") {
  CHECK(exit_code_for(ErrorKind::Usage) == 1);
  CHECK(exit_code_for(ErrorKind::Data) == 2);
  CHECK(exit_code_for(ErrorKind::Numeric) == 3);
}
