#pragma once

#include <utility>
#include <vector>

#include "floodgraph/grid.hpp"

namespace floodgraph {

// D8 neighbor order used everywhere (also the tie-break order):
// E, SE, S, SW, W, NW, N, NE. Direction codes are 1..8 in this order,
// 0 marks an outlet (drains off the valid domain), nodata elsewhere.
inline constexpr int kD8RowOff[8] = {0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr int kD8ColOff[8] = {1, 1, 0, -1, -1, -1, 0, 1};
inline constexpr int kDirOutlet = 0;

/// tan(slope) floor used in the wetness index to keep ln finite on flats.
inline constexpr double kSlopeFloor = 1e-6;

/// DEM-derived surface descriptors. Border cells and cells whose 3x3
/// window touches nodata are nodata in every product.
///
/// Conventions: slope in degrees [0, 90]; aspect in degrees [0, 360),
/// 0 = north, clockwise, facing downslope, nodata on flat cells;
/// plan curvature (1/m) positive where contours converge flow;
/// profile curvature (1/m) positive where flow accelerates downslope;
/// TRI (m) = mean absolute elevation difference to the 8 neighbors.
struct TerrainDerivatives {
  Grid slope;
  Grid aspect;
  Grid plan_curv;
  Grid prof_curv;
  Grid tri;
};

/// D8 routing state over a depression-filled DEM.
struct FlowModel {
  Grid directions;     // codes above
  Grid accumulation;   // cell counts, >= 1, includes the cell itself
  Grid specific_area;  // m^2/m = accumulation * cellsize
  Grid filled_dem;     // conditioned surface actually routed on
};

/// Sub-watershed labeling produced by splitting the channel network at
/// junctions and outlets. Ids are dense, 0-based, in deterministic order.
struct WatershedPartition {
  Grid labels;  // watershed id per valid cell
  int count = 0;
  std::vector<double> areas_km2;  // indexed by id
  std::vector<int> downstream;    // indexed by id; -1 = drains off-domain
};

/// Slope, aspect and TRI from the Horn 3x3 stencil; curvatures from the
/// least-squares quadratic fit to the 3x3 window.
TerrainDerivatives derive_terrain(const Grid& dem);

/// Priority-flood depression fill, then steepest-descent D8 directions
/// (drop divided by sqrt(2) on diagonals, ties broken by the fixed
/// neighbor order) and flow accumulation in topological order. Flats are
/// drained deterministically toward their spill cells.
FlowModel d8_flow(const Grid& dem);

/// TWI = ln(A_s / max(tan(slope), kSlopeFloor)); SPI = A_s * tan(slope).
std::pair<Grid, Grid> wetness_indices(const FlowModel& flow, const TerrainDerivatives& terrain);

/// Cells whose contributing area (accumulation * cellsize^2) reaches
/// min_area_km2. Throws std::domain_error when no cell qualifies.
BinaryGrid extract_channels(const FlowModel& flow, double min_area_km2);

/// Split the channel network into segments at junctions and outlets and
/// label every valid cell with the segment its D8 path first reaches.
/// Drainage trees that exit the domain without touching a channel are
/// merged into the segment of the channel cell nearest their outlet, so
/// the labels always partition the valid domain.
WatershedPartition delineate_watersheds(const FlowModel& flow, const BinaryGrid& channels);

/// Distance in meters to the nearest channel cell.
Grid distance_to_channels(const BinaryGrid& channels);

}  // namespace floodgraph
