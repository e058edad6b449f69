#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "floodgraph/baselines.hpp"
#include "floodgraph/risk.hpp"
#include "floodgraph/scenario.hpp"

namespace floodgraph {

/// Flat key = value run configuration; units live in the key names.
/// Unknown keys are an error, so stale configs fail loudly.
struct PipelineConfig {
  // inputs (pre-aligned rasters) and output directory
  std::string dem_path;
  std::string rainfall_path;
  std::string lulc_path;
  std::string soil_clay_path;
  std::string reference_db_path;
  std::string monsoon_db_path;
  std::string permanent_water_path;
  std::string districts_path;  // optional
  std::string assets_path;     // optional
  std::string out_dir = "out";

  std::uint64_t seed = 1;

  // scenario generation
  int rows = 128;
  int cols = 128;
  double cellsize_m = 100.0;
  double flood_fraction = 0.02;

  // inventory thresholds
  double change_threshold_db = -3.0;
  double max_slope_deg = 15.0;
  double max_dist_m = 2000.0;
  int per_year_cap = 500;
  int ratio = 5;
  double buffer_m = 1000.0;
  int train_year_first = 2018;
  int train_year_last = 2022;
  int test_year_first = 2023;
  int test_year_last = 2023;

  // hydrology
  double channel_min_area_km2 = 1.0;
  // 150 km^2 reproduces the regional-scale default; desk-scale scenarios
  // override this in their generated config.
  double watershed_min_area_km2 = 150.0;

  // evaluation / uncertainty / products
  int k_blocks = 5;
  double alpha = 0.10;
  ClassBoundaries class_bounds;
  double width_narrow_max = 0.15;

  // models
  std::string model = "stacking";  // drives the map, conformal and shap stages
  TrainConfig train;
  int shap_background_rows = 64;
  int shap_samples = 100;

  void validate() const;
  ScenarioParams scenario_params() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
void store_config(const PipelineConfig& config, const std::filesystem::path& path);

/// Stage names in execution order for `run`.
const std::vector<std::string>& pipeline_stage_names();

/// Write a generated scenario (rasters, assets, a ready-to-run config)
/// under config.out_dir/scenario and return the config actually written.
PipelineConfig write_scenario_bundle(const PipelineConfig& config);

/// Run one named stage against the files in config.out_dir. Missing
/// upstream artifacts raise errors naming the missing path.
void run_stage(const PipelineConfig& config, const std::string& stage);

/// Run every stage in order, maintaining out_dir/MANIFEST.txt as stages
/// complete and writing out_dir/run_report.json at the end. The report is
/// deterministic: identical config and inputs give identical bytes.
void run_pipeline(const PipelineConfig& config);

}  // namespace floodgraph
