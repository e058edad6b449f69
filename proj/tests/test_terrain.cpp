#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "floodgraph/rng.hpp"
#include "floodgraph/terrain.hpp"

using namespace floodgraph;

namespace {

Grid plane(int n, double gx, double gy, double cellsize = 1.0) {
  // z = gx * x + gy * y with x east, y north
  Grid g(n, n, 0.0, 0.0, cellsize);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      g.at(r, c) = gx * g.x_of_col(c) + gy * g.y_of_row(r);
  return g;
}

Grid random_dem(int nrows, int ncols, std::uint64_t seed, double nodata_frac = 0.0) {
  Rng rng(seed);
  Grid g(nrows, ncols, 0.0, 0.0, 30.0);
  for (double& v : g.values)
    v = rng.next_double() < nodata_frac ? g.nodata : rng.next_uniform(0.0, 100.0);
  return g;
}

// Independent oracle: walk every cell's D8 path and count the cells whose
// path passes through each cell.
Grid accumulation_oracle(const FlowModel& flow) {
  const Grid& dirs = flow.directions;
  Grid acc = dirs.like(dirs.nodata);
  for (int r = 0; r < dirs.nrows; ++r)
    for (int c = 0; c < dirs.ncols; ++c)
      if (dirs.valid_at(r, c)) acc.at(r, c) = 0.0;
  const std::size_t limit = dirs.size() + 1;
  for (int r = 0; r < dirs.nrows; ++r)
    for (int c = 0; c < dirs.ncols; ++c) {
      if (!dirs.valid_at(r, c)) continue;
      int cr = r, cc = c;
      std::size_t steps = 0;
      for (;;) {
        REQUIRE(steps++ < limit);  // acyclicity
        acc.at(cr, cc) += 1.0;
        const int code = static_cast<int>(dirs.at(cr, cc));
        if (code == kDirOutlet) break;
        cr += kD8RowOff[code - 1];
        cc += kD8ColOff[code - 1];
      }
    }
  return acc;
}

}  // namespace

TEST_CASE("constant dem: flat surface derivatives") {
  Grid g(5, 5, 0, 0, 30.0);
  for (double& v : g.values) v = 42.0;
  const TerrainDerivatives t = derive_terrain(g);
  CHECK(t.slope.at(2, 2) == 0.0);
  CHECK(t.tri.at(2, 2) == 0.0);
  CHECK(t.plan_curv.at(2, 2) == 0.0);
  CHECK(t.prof_curv.at(2, 2) == 0.0);
  CHECK(t.aspect.is_nodata(t.aspect.at(2, 2)));  // aspect undefined on flats
  CHECK(t.slope.is_nodata(t.slope.at(0, 0)));    // border is nodata
}

TEST_CASE("plane z = x: slope 45 degrees, aspect 270, zero curvature") {
  const Grid g = plane(7, 1.0, 0.0);
  const TerrainDerivatives t = derive_terrain(g);
  CHECK(t.slope.at(3, 3) == doctest::Approx(45.0).epsilon(1e-12));
  CHECK(t.aspect.at(3, 3) == doctest::Approx(270.0).epsilon(1e-12));
  CHECK(std::abs(t.plan_curv.at(3, 3)) < 1e-12);
  CHECK(std::abs(t.prof_curv.at(3, 3)) < 1e-12);
}

TEST_CASE("analytic planes match closed forms to 1e-9 relative") {
  struct Case {
    double gx, gy;
  };
  for (const Case cs : {Case{0.2, 0.0}, Case{0.0, -0.3}, Case{0.15, 0.25}, Case{-0.4, 0.1}}) {
    const Grid g = plane(9, cs.gx, cs.gy, 10.0);
    const TerrainDerivatives t = derive_terrain(g);
    const double want_slope = std::atan(std::hypot(cs.gx, cs.gy)) * 180.0 / M_PI;
    double want_aspect = std::atan2(-cs.gx, -cs.gy) * 180.0 / M_PI;
    if (want_aspect < 0) want_aspect += 360.0;
    for (int r = 1; r < 8; ++r)
      for (int c = 1; c < 8; ++c) {
        CHECK(t.slope.at(r, c) == doctest::Approx(want_slope).epsilon(1e-9));
        CHECK(t.aspect.at(r, c) == doctest::Approx(want_aspect).epsilon(1e-9));
      }
  }
}

TEST_CASE("TRI on a unit-step plane matches the direct 8-neighbor mean") {
  // z increases 1 per cell eastward: |dz| = 1 for the 6 east/west-offset
  // neighbors and 0 for N/S, so TRI = 6/8 = 0.75
  Grid g(5, 5, 0, 0, 30.0);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) g.at(r, c) = static_cast<double>(c);
  const TerrainDerivatives t = derive_terrain(g);
  CHECK(t.tri.at(2, 2) == doctest::Approx(0.75));
}

TEST_CASE("TRI matches a brute-force neighbor scan on random terrain") {
  const Grid g = random_dem(12, 12, 7);
  const TerrainDerivatives t = derive_terrain(g);
  for (int r = 1; r < 11; ++r)
    for (int c = 1; c < 11; ++c) {
      double sum = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          if (dr || dc) sum += std::abs(g.at(r, c) - g.at(r + dr, c + dc));
      CHECK(t.tri.at(r, c) == doctest::Approx(sum / 8.0).epsilon(1e-12));
    }
}

TEST_CASE("curvature signs: a bowl is convergent, a dome accelerates flow") {
  Grid bowl(9, 9, 0, 0, 1.0);
  Grid dome(9, 9, 0, 0, 1.0);
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) {
      const double x = bowl.x_of_col(c) - 4.5, y = bowl.y_of_row(r) - 4.5;
      bowl.at(r, c) = 0.5 * (x * x + y * y);
      dome.at(r, c) = -0.5 * (x * x + y * y);
    }
  const TerrainDerivatives tb = derive_terrain(bowl);
  const TerrainDerivatives td = derive_terrain(dome);
  CHECK(tb.plan_curv.at(2, 2) > 0.0);   // contours converge toward the pit
  CHECK(td.plan_curv.at(2, 2) < 0.0);   // divergent on the dome
  CHECK(td.prof_curv.at(2, 2) > 0.0);   // slope steepens downslope: accelerating
  CHECK(tb.prof_curv.at(2, 2) < 0.0);
}

TEST_CASE("derive_terrain rejects grids smaller than 3x3") {
  Grid g(2, 5, 0, 0, 30.0);
  CHECK_THROWS_AS(derive_terrain(g), DimensionError);
}

TEST_CASE("1x5 descending ramp accumulates 1..5") {
  Grid g(1, 5, 0, 0, 30.0);
  g.values = {5, 4, 3, 2, 1};
  const FlowModel flow = d8_flow(g);
  for (int c = 0; c < 5; ++c) CHECK(flow.accumulation.at(0, c) == doctest::Approx(c + 1));
  CHECK(flow.directions.at(0, 4) == kDirOutlet);
}

TEST_CASE("constant dem still satisfies the accumulation recurrence") {
  Grid g(8, 8, 0, 0, 30.0);
  for (double& v : g.values) v = 10.0;
  const FlowModel flow = d8_flow(g);
  const Grid oracle = accumulation_oracle(flow);
  double outlet_sum = 0.0;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      CHECK(flow.accumulation.at(r, c) == oracle.at(r, c));
      if (flow.directions.at(r, c) == kDirOutlet) outlet_sum += flow.accumulation.at(r, c);
    }
  CHECK(outlet_sum == doctest::Approx(64.0));
}

TEST_CASE("accumulation equals the path-walk oracle on random dems") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Grid g = random_dem(20, 20, 100 + seed, seed % 3 == 0 ? 0.1 : 0.0);
    if (g.count_valid() == 0) continue;
    const FlowModel flow = d8_flow(g);
    const Grid oracle = accumulation_oracle(flow);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(flow.accumulation.values[i] == oracle.values[i]);

    // conservation: outlet accumulations sum to the valid-cell count
    double outlet_sum = 0.0;
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 20; ++c)
        if (flow.directions.valid_at(r, c) && flow.directions.at(r, c) == kDirOutlet)
          outlet_sum += flow.accumulation.at(r, c);
    CHECK(outlet_sum == doctest::Approx(g.count_valid()));
  }
}

TEST_CASE("d8_flow rejects an all-nodata grid") {
  Grid g(4, 4, 0, 0, 30.0);
  for (double& v : g.values) v = g.nodata;
  CHECK_THROWS_AS(d8_flow(g), std::domain_error);
}

TEST_CASE("wetness indices evaluate the defining formulas") {
  // hand-assembled flow/terrain pair on a 1x1-like stub grid
  Grid as(1, 3, 0, 0, 1.0);
  Grid slope(1, 3, 0, 0, 1.0);
  as.values = {1.0, 100.0, 1.0};
  slope.values = {45.0, 45.0, 0.0};
  FlowModel flow;
  flow.specific_area = as;
  flow.accumulation = as;
  flow.directions = as;
  TerrainDerivatives terrain;
  terrain.slope = slope;
  const auto [twi, spi] = wetness_indices(flow, terrain);
  CHECK(twi.values[0] == doctest::Approx(0.0).epsilon(1e-12));            // ln(1/1)
  CHECK(twi.values[1] == doctest::Approx(std::log(100.0)).epsilon(1e-12));
  CHECK(spi.values[1] == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(spi.values[2] == 0.0);                                            // tan(0) = 0
  // slope floor: A_s = 1, beta = 0 -> ln(1e6)
  CHECK(twi.values[2] == doctest::Approx(std::log(1e6)).epsilon(1e-12));
}

TEST_CASE("TWI monotone in A_s and slope") {
  auto twi_of = [](double as_v, double slope_deg) {
    Grid as(1, 1, 0, 0, 1.0), sl(1, 1, 0, 0, 1.0);
    as.values = {as_v};
    sl.values = {slope_deg};
    FlowModel flow;
    flow.specific_area = as;
    flow.accumulation = as;
    flow.directions = as;
    TerrainDerivatives t;
    t.slope = sl;
    return wetness_indices(flow, t).first.values[0];
  };
  CHECK(twi_of(200.0, 30.0) > twi_of(100.0, 30.0));
  CHECK(twi_of(100.0, 40.0) < twi_of(100.0, 30.0));
}

TEST_CASE("extract_channels thresholds contributing area") {
  Grid g(1, 5, 0, 0, 1000.0);
  g.values = {5, 4, 3, 2, 1};
  const FlowModel flow = d8_flow(g);
  // threshold 3 km^2 at 1 km^2 cells: accumulation >= 3 -> last 3 cells
  const BinaryGrid ch = extract_channels(flow, 3.0);
  CHECK(ch.count_ones() == 3);
  CHECK(ch.is_one(0, 2));
  CHECK(ch.is_one(0, 3));
  CHECK(ch.is_one(0, 4));
  // tiny threshold: every valid cell qualifies
  CHECK(extract_channels(flow, 1e-9).count_ones() == 5);
  // threshold above the whole domain: empty network
  CHECK_THROWS_AS(extract_channels(flow, 100.0), std::domain_error);
}

namespace {

// 9x9 DEM with two tributaries meeting a southward trunk; channel cells
// are specified by hand so segment structure is known exactly.
struct YJunction {
  Grid dem{9, 9, 0.0, 0.0, 100.0};
  Grid channel_mask{9, 9, 0.0, 0.0, 100.0};
  std::set<std::pair<int, int>> arm_a, arm_b, trunk;

  YJunction() {
    arm_a = {{1, 0}, {1, 1}, {1, 2}, {1, 3}};
    arm_b = {{1, 8}, {1, 7}, {1, 6}, {1, 5}};
    for (int r = 1; r <= 8; ++r) trunk.insert({r, 4});

    auto channel_dist = [&](int r, int c) {
      double best = 1e9;
      for (const auto& s : {arm_a, arm_b, trunk})
        for (const auto& [cr, cc] : s)
          best = std::min(best, std::hypot(double(r - cr), double(c - cc)));
      return best;
    };
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c) dem.at(r, c) = 60.0 + 4.0 * channel_dist(r, c);
    // strictly descending channels toward and down the trunk; the trunk is
    // deep enough that the arms' steepest descent is the orthogonal step
    // into the junction, not the diagonal one past it
    dem.at(1, 0) = 50;
    dem.at(1, 1) = 49;
    dem.at(1, 2) = 48;
    dem.at(1, 3) = 47;
    dem.at(1, 8) = 50;
    dem.at(1, 7) = 49;
    dem.at(1, 6) = 48;
    dem.at(1, 5) = 47;
    for (int r = 1; r <= 8; ++r) dem.at(r, 4) = 30.0 - 5.0 * (r - 1);

    for (const auto& s : {arm_a, arm_b, trunk})
      for (const auto& [r, c] : s) channel_mask.at(r, c) = 1.0;
  }
};

}  // namespace

TEST_CASE("Y junction: three watersheds with the right downstream relation") {
  const YJunction y;
  const FlowModel flow = d8_flow(y.dem);
  const WatershedPartition part = delineate_watersheds(flow, BinaryGrid(y.channel_mask));

  REQUIRE(part.count == 3);
  const int seg_a = static_cast<int>(part.labels.at(1, 0));
  const int seg_b = static_cast<int>(part.labels.at(1, 8));
  const int seg_t = static_cast<int>(part.labels.at(4, 4));
  CHECK(seg_a != seg_b);
  CHECK(seg_a != seg_t);
  CHECK(seg_b != seg_t);
  CHECK(part.downstream[seg_a] == seg_t);
  CHECK(part.downstream[seg_b] == seg_t);
  CHECK(part.downstream[seg_t] == -1);

  // the junction cell belongs to the trunk segment
  CHECK(static_cast<int>(part.labels.at(1, 4)) == seg_t);

  // labels match a direct path walk to the first channel cell
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) {
      int cr = r, cc = c;
      int guard = 0;
      while (y.channel_mask.at(cr, cc) != 1.0 && guard++ < 100) {
        const int code = static_cast<int>(flow.directions.at(cr, cc));
        REQUIRE(code != kDirOutlet);  // every path here reaches the channel
        cr += kD8RowOff[code - 1];
        cc += kD8ColOff[code - 1];
      }
      CHECK(part.labels.at(r, c) == part.labels.at(cr, cc));
    }

  // partition property: areas sum to the domain area
  double total = 0.0;
  for (double a : part.areas_km2) total += a;
  CHECK(total == doctest::Approx(81.0 * 0.01));
}

TEST_CASE("single straight channel gives one watershed covering the domain") {
  Grid g(1, 6, 0, 0, 1000.0);
  g.values = {6, 5, 4, 3, 2, 1};
  const FlowModel flow = d8_flow(g);
  Grid mask = g.like(0.0);
  for (int c = 0; c < 6; ++c) mask.at(0, c) = 1.0;
  const WatershedPartition part = delineate_watersheds(flow, BinaryGrid(mask));
  CHECK(part.count == 1);
  CHECK(part.downstream[0] == -1);
  CHECK(part.areas_km2[0] == doctest::Approx(6.0));
}

TEST_CASE("watershed labels partition every random dem") {
  for (std::uint64_t seed = 40; seed < 44; ++seed) {
    const Grid g = random_dem(24, 24, seed);
    const FlowModel flow = d8_flow(g);
    const BinaryGrid channels = extract_channels(flow, 20.0 * 30.0 * 30.0 / 1e6);
    const WatershedPartition part = delineate_watersheds(flow, channels);
    CHECK(part.count >= 1);
    double total = 0.0;
    for (double a : part.areas_km2) total += a;
    CHECK(total == doctest::Approx(g.count_valid() * 30.0 * 30.0 / 1e6));
    // downstream relation is acyclic
    for (int w = 0; w < part.count; ++w) {
      int cur = w, steps = 0;
      while (cur >= 0) {
        cur = part.downstream[static_cast<std::size_t>(cur)];
        REQUIRE(steps++ <= part.count);
      }
    }
  }
}

TEST_CASE("distance_to_channels delegates to the exact transform") {
  Grid mask(3, 3, 0, 0, 30.0);
  mask.at(1, 1) = 1.0;
  const Grid d = distance_to_channels(BinaryGrid(mask));
  CHECK(d.at(1, 1) == 0.0);
  CHECK(d.at(1, 0) == doctest::Approx(30.0));
}
