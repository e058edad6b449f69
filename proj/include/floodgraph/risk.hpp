#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "floodgraph/grid.hpp"

namespace floodgraph {

/// Four-level susceptibility discretization. Class codes in rasters are
/// the enum values 0..3.
enum class SusceptibilityClass { Low = 0, Moderate = 1, High = 2, VeryHigh = 3 };

/// Upper boundaries of the lower three classes; lower classes are
/// half-open, VeryHigh is [high_max, 1].
struct ClassBoundaries {
  double low_max = 0.30;
  double moderate_max = 0.50;
  double high_max = 0.70;
};

SusceptibilityClass classify_value(double p, const ClassBoundaries& bounds = {});

/// Class-code raster from a probability raster; values must lie in [0, 1]
/// or be nodata.
Grid classify(const Grid& susceptibility, const ClassBoundaries& bounds = {});

/// Decision tiers (raster codes 1..4):
///   P1 = VeryHigh and width <  narrow_max   (immediate action)
///   P2 = High, any width                    (capital repair)
///   P3 = VeryHigh and width >= narrow_max   (precautionary monitoring)
///   P4 = Low or Moderate, any width         (routine preparedness)
Grid decision_tiers(const Grid& class_map, const Grid& width_map, double narrow_max = 0.15);

struct ZoneAreas {
  std::array<double, 4> km2{};
  std::array<double, 4> percent{};
  double total_km2 = 0.0;
};

ZoneAreas zone_area_summary(const Grid& class_map);

struct Asset {
  std::string category;  // road, bridge, hydro, settlement, tourist
  std::string name;
  std::vector<std::pair<double, double>> geometry;  // 1 point, or polyline vertices
  bool is_line = false;                             // polylines only for roads
};

/// Assets CSV: `category,name,geometry` where geometry is `POINT(x y)` or
/// `LINESTRING(x1 y1, x2 y2, ...)`; everything after the second comma is
/// the geometry.
std::vector<Asset> load_assets_csv(const std::filesystem::path& path);
void store_assets_csv(const std::vector<Asset>& assets, const std::filesystem::path& path);

struct ExposureEntry {
  int points_total = 0;
  int points_exposed = 0;       // point assets on High or VeryHigh cells
  double line_km_total = 0.0;
  double line_km_exposed = 0.0;  // polyline length over High or VeryHigh cells
};

/// Exposure per asset category against a class-code raster. Polylines are
/// sampled at cellsize/2 steps; each step's length counts when its sample
/// point lies on a qualifying cell.
std::map<std::string, ExposureEntry> exposure_overlay(const std::vector<Asset>& assets,
                                                      const Grid& class_map);

void store_exposure_json(const std::map<std::string, ExposureEntry>& exposure,
                         const std::filesystem::path& path);

}  // namespace floodgraph
