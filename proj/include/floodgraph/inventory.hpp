#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "floodgraph/grid.hpp"

namespace floodgraph {

enum class PointSource { sar, supplied };

struct SamplePoint {
  double x = 0.0;  // easting, m
  double y = 0.0;  // northing, m
  int label = 0;   // 1 = flood, 0 = non-flood
  int year = 0;
  PointSource source = PointSource::sar;
};

struct YearRange {
  int first = 0;
  int last = -1;  // inclusive; empty when last < first
  bool contains(int year) const { return year >= first && year <= last; }
  bool overlaps(const YearRange& o) const {
    return first <= o.last && o.first <= last;
  }
};

struct Inventory {
  std::vector<SamplePoint> points;
  int ratio = 5;            // negatives per positive
  double buffer_m = 1000.0; // flood/non-flood exclusion distance
};

/// Change-detection mask: a cell is flagged iff
///   monsoon - reference <= threshold_db (threshold < 0)
///   AND permanent_water = 0
///   AND slope < max_slope_deg
///   AND dist_channel <= max_dist_m,
/// then cleaned by 3x3 morphological opening. Nodata in any input
/// propagates to the output.
BinaryGrid detect_change(const Grid& reference_db, const Grid& monsoon_db,
                         const BinaryGrid& permanent_water, const Grid& slope,
                         const Grid& dist_channel, double threshold_db,
                         double max_slope_deg, double max_dist_m);

/// Same rule without the morphological opening (diagnostics and tests).
BinaryGrid detect_change_raw(const Grid& reference_db, const Grid& monsoon_db,
                             const BinaryGrid& permanent_water, const Grid& slope,
                             const Grid& dist_channel, double threshold_db,
                             double max_slope_deg, double max_dist_m);

/// Uniform sample without replacement from flagged cells, capped at
/// per_year_cap, points at cell centers. Empty mask gives an empty result.
std::vector<SamplePoint> sample_flood_points(const BinaryGrid& mask, int per_year_cap,
                                             int year, std::uint64_t seed);

/// Uniform sample of ratio * |floods| cells of the eligible domain (domain
/// cells at least buffer_m from every flood point). Each point gets a year
/// drawn uniformly from the distinct flood years so temporal splitting
/// keeps both classes. Throws CapacityError when the eligible area is too
/// small, reporting the shortfall.
std::vector<SamplePoint> sample_nonflood(const BinaryGrid& domain,
                                         const std::vector<SamplePoint>& floods, int ratio,
                                         double buffer_m, std::uint64_t seed);

struct TemporalSplit {
  Inventory train;
  Inventory test;
  int dropped = 0;  // points in neither range
};

/// Partition by year. Ranges must be disjoint.
TemporalSplit split_temporal(const Inventory& inv, const YearRange& train_years,
                             const YearRange& test_years);

// Point CSV interchange: header `x,y,label,year,source`.
void store_points_csv(const std::vector<SamplePoint>& points, const std::filesystem::path& path);
std::vector<SamplePoint> load_points_csv(const std::filesystem::path& path);

}  // namespace floodgraph
