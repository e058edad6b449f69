#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "floodgraph/grid.hpp"
#include "floodgraph/inventory.hpp"

namespace floodgraph {

inline constexpr int kNumFactors = 12;
inline constexpr int kLulcFactor = 9;  // the only categorical factor

/// Canonical factor order used by every table, model and CSV.
inline constexpr std::array<const char*, kNumFactors> kFactorNames = {
    "elevation", "slope",    "aspect", "plan_curv", "prof_curv", "twi",
    "spi",       "tri",      "rainfall", "lulc",    "soil_clay", "dist_river"};

using FeatureVector = std::array<double, kNumFactors>;

/// The aligned 12-factor raster stack.
struct FactorStack {
  std::array<Grid, kNumFactors> grids;  // canonical order

  static bool is_categorical(int j) { return j == kLulcFactor; }
  /// Throws GeorefError unless all grids share georeferencing.
  void validate() const;
};

struct SampleRow {
  SamplePoint point;
  FeatureVector features{};
  int block_id = -1;      // spatial CV block; -1 until assigned
  int watershed_id = -1;  // -1 until assigned
};

struct SampleTable {
  std::vector<SampleRow> rows;
  int dropped = 0;  // points out of bounds or over nodata
};

/// Nearest-cell lookup of all 12 factors per point. Rows touching nodata
/// or falling outside the stack are dropped and counted, never imputed.
SampleTable extract_features(const FactorStack& stack, const std::vector<SamplePoint>& points);

struct PearsonPair {
  int i = 0, j = 0;  // factor indices, i < j
  double r = 0.0;
};

struct PearsonReport {
  std::vector<PearsonPair> flagged;        // |r| > threshold
  std::vector<int> zero_variance;          // factors with undefined correlations
};

/// Pairwise Pearson correlation over the continuous factors (LULC
/// excluded). Requires >= 3 rows.
PearsonReport pearson_screen(const SampleTable& table, double threshold);

struct VifReport {
  // VIF per factor; NaN for LULC (categorical, excluded).
  std::array<double, kNumFactors> vif{};
  std::vector<int> flagged;  // VIF > threshold or perfectly collinear
};

/// VIF_j = 1 / (1 - R^2_j) with R^2_j from the least-squares regression
/// (QR, with intercept) of factor j on the other continuous factors.
/// Perfect collinearity reports +infinity and is flagged.
VifReport vif_screen(const SampleTable& table, double threshold);

// SampleTable CSV:
// x,y,label,year,block_id,watershed_id,<12 factor columns in canonical order>
void store_sample_table_csv(const SampleTable& table, const std::filesystem::path& path);
SampleTable load_sample_table_csv(const std::filesystem::path& path);

}  // namespace floodgraph
