#pragma once

#include <cstdint>
#include <vector>

#include "floodgraph/grid.hpp"
#include "floodgraph/risk.hpp"
#include "floodgraph/terrain.hpp"

namespace floodgraph {

struct ScenarioParams {
  int rows = 128;
  int cols = 128;
  double cellsize_m = 100.0;
  std::uint64_t seed = 1;
  double flood_fraction = 0.02;  // planted truth cells / valid cells, in (0, 0.2)

  // generator-side hydrology settings
  double channel_min_area_km2 = 1.0;
  double watershed_min_area_km2 = 4.0;
  // plausibility constraints the planted cells satisfy by construction
  double max_slope_deg = 15.0;
  double max_dist_m = 2000.0;
};

/// Synthetic study area with known ground truth. The DEM is a
/// diamond-square fractal over a south-tilted plane; rainfall carries a
/// regional gradient plus a per-watershed anomaly; the planted flood cells
/// combine a local mechanism (high-TWI, channel-proximate cells in wet
/// watersheds) with a propagated one (watersheds downstream of high-runoff
/// watersheds flood preferentially), so graph-aware models have signal
/// that pixel models cannot see. Backscatter pairs are built so that a
/// -3 dB change detection recovers the truth exactly up to morphology:
/// monsoon = reference - 4 dB on truth cells and reference - U(0,2) dB
/// elsewhere.
struct Scenario {
  ScenarioParams params;
  Grid dem;
  Grid rainfall;
  Grid soil_clay;
  Grid lulc;
  Grid reference_db;
  Grid monsoon_db;
  Grid districts;  // quadrant ids 0..3, for district-level reporting
  BinaryGrid permanent_water;
  BinaryGrid truth;
};

/// Deterministic in every byte for a given parameter set.
Scenario generate_scenario(const ScenarioParams& params);

/// Small deterministic asset layer for exposure reporting on generated
/// scenarios: one road crossing the domain plus a handful of point assets.
std::vector<Asset> demo_assets(const Grid& georef);

}  // namespace floodgraph
