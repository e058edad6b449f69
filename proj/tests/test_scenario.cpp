#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "floodgraph/inventory.hpp"
#include "floodgraph/scenario.hpp"

using namespace floodgraph;

namespace {

ScenarioParams small_params(std::uint64_t seed = 5) {
  ScenarioParams p;
  p.rows = 96;
  p.cols = 96;
  p.cellsize_m = 100.0;
  p.seed = seed;
  p.flood_fraction = 0.02;
  p.watershed_min_area_km2 = 2.5;
  return p;
}

}  // namespace

TEST_CASE("scenario generation is byte-deterministic in the seed") {
  const Scenario a = generate_scenario(small_params(7));
  const Scenario b = generate_scenario(small_params(7));
  CHECK(a.dem.values == b.dem.values);
  CHECK(a.rainfall.values == b.rainfall.values);
  CHECK(a.soil_clay.values == b.soil_clay.values);
  CHECK(a.lulc.values == b.lulc.values);
  CHECK(a.reference_db.values == b.reference_db.values);
  CHECK(a.monsoon_db.values == b.monsoon_db.values);
  CHECK(a.truth.raster.values == b.truth.raster.values);
  CHECK(a.permanent_water.raster.values == b.permanent_water.raster.values);

  const Scenario c = generate_scenario(small_params(8));
  CHECK(a.dem.values != c.dem.values);
}

TEST_CASE("parameter validation") {
  ScenarioParams p = small_params();
  p.rows = 32;
  CHECK_THROWS_AS(generate_scenario(p), std::invalid_argument);
  p = small_params();
  p.flood_fraction = 0.0;
  CHECK_THROWS_AS(generate_scenario(p), std::invalid_argument);
  p.flood_fraction = 0.25;
  CHECK_THROWS_AS(generate_scenario(p), std::invalid_argument);
  p = small_params();
  p.flood_fraction = 0.15;
  p.max_dist_m = 100.0;  // plausible strip too thin for this fraction
  CHECK_THROWS_AS(generate_scenario(p), CapacityError);
}

TEST_CASE("planted truth hits the requested fraction and respects plausibility") {
  const ScenarioParams p = small_params(11);
  const Scenario sc = generate_scenario(p);
  const long target = std::lround(p.flood_fraction * sc.dem.count_valid());
  CHECK(sc.truth.count_ones() == target);

  const TerrainDerivatives terrain = derive_terrain(sc.dem);
  const FlowModel flow = d8_flow(sc.dem);
  const Grid dist = distance_to_channels(extract_channels(flow, p.channel_min_area_km2));
  for (int r = 0; r < p.rows; ++r)
    for (int c = 0; c < p.cols; ++c) {
      if (!sc.truth.is_one(r, c)) continue;
      CHECK(terrain.slope.at(r, c) < p.max_slope_deg);
      CHECK(dist.at(r, c) <= p.max_dist_m);
      CHECK_FALSE(sc.permanent_water.is_one(r, c));
    }
}

TEST_CASE("change detection recovers the planted truth before opening") {
  const ScenarioParams p = small_params(13);
  const Scenario sc = generate_scenario(p);
  const TerrainDerivatives terrain = derive_terrain(sc.dem);
  const FlowModel flow = d8_flow(sc.dem);
  const Grid dist = distance_to_channels(extract_channels(flow, p.channel_min_area_km2));

  const BinaryGrid raw = detect_change_raw(sc.reference_db, sc.monsoon_db, sc.permanent_water,
                                           terrain.slope, dist, -3.0, p.max_slope_deg,
                                           p.max_dist_m);
  long truth_cells = 0, recovered = 0, false_cells = 0;
  for (std::size_t i = 0; i < raw.raster.size(); ++i) {
    const bool truth = sc.truth.raster.values[i] == 1.0;
    const bool flagged = raw.raster.values[i] == 1.0;
    truth_cells += truth ? 1 : 0;
    recovered += (truth && flagged) ? 1 : 0;
    false_cells += (!truth && flagged) ? 1 : 0;
  }
  CHECK(recovered >= static_cast<long>(0.95 * truth_cells));
  CHECK(false_cells <= static_cast<long>(0.01 * raw.raster.size()));
}

TEST_CASE("the dem drains and supports a multi-watershed graph") {
  const ScenarioParams p = small_params(17);
  const Scenario sc = generate_scenario(p);
  const FlowModel flow = d8_flow(sc.dem);
  const WatershedPartition part =
      delineate_watersheds(flow, extract_channels(flow, p.watershed_min_area_km2));
  CHECK(part.count >= 8);  // enough units for 5 spatial blocks
  int with_downstream = 0;
  for (int d : part.downstream) with_downstream += d >= 0 ? 1 : 0;
  CHECK(with_downstream >= part.count / 3);  // real connectivity, not islands
}

TEST_CASE("districts cover the domain with four quadrants") {
  const Scenario sc = generate_scenario(small_params(19));
  std::array<long, 4> counts{};
  for (double v : sc.districts.values) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 3.0);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (long c : counts) CHECK(c > 0);
}

TEST_CASE("demo assets parse and include one road") {
  const Scenario sc = generate_scenario(small_params(23));
  const auto assets = demo_assets(sc.dem);
  int roads = 0;
  for (const auto& a : assets) roads += a.is_line ? 1 : 0;
  CHECK(roads == 1);
  CHECK(assets.size() >= 5);
}
