#include "floodgraph/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "floodgraph/rng.hpp"

namespace floodgraph {

namespace {

// Classic diamond-square on a (2^k + 1)^2 lattice, amplitude halving per
// level; returned values are centered on 0.
std::vector<double> diamond_square(int size, double amplitude, Rng& rng) {
  std::vector<double> z(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), 0.0);
  auto at = [&](int r, int c) -> double& {
    return z[static_cast<std::size_t>(r) * static_cast<std::size_t>(size) +
             static_cast<std::size_t>(c)];
  };
  at(0, 0) = rng.next_uniform(-amplitude, amplitude);
  at(0, size - 1) = rng.next_uniform(-amplitude, amplitude);
  at(size - 1, 0) = rng.next_uniform(-amplitude, amplitude);
  at(size - 1, size - 1) = rng.next_uniform(-amplitude, amplitude);

  double amp = amplitude;
  for (int step = size - 1; step > 1; step /= 2) {
    const int half = step / 2;
    for (int r = half; r < size; r += step)
      for (int c = half; c < size; c += step) {
        const double avg = (at(r - half, c - half) + at(r - half, c + half) +
                            at(r + half, c - half) + at(r + half, c + half)) /
                           4.0;
        at(r, c) = avg + rng.next_uniform(-amp, amp);
      }
    for (int r = 0; r < size; r += half)
      for (int c = (r / half) % 2 == 0 ? half : 0; c < size; c += step) {
        double sum = 0.0;
        int cnt = 0;
        if (r - half >= 0) { sum += at(r - half, c); ++cnt; }
        if (r + half < size) { sum += at(r + half, c); ++cnt; }
        if (c - half >= 0) { sum += at(r, c - half); ++cnt; }
        if (c + half < size) { sum += at(r, c + half); ++cnt; }
        at(r, c) = sum / cnt + rng.next_uniform(-amp, amp);
      }
    amp *= 0.5;
  }
  return z;
}

Grid fractal_grid(const ScenarioParams& p, double amplitude, Rng& rng) {
  int lattice = 1;
  while (lattice + 1 < std::max(p.rows, p.cols)) lattice *= 2;
  lattice += 1;
  const auto z = diamond_square(lattice, amplitude, rng);
  Grid g(p.rows, p.cols, 0.0, 0.0, p.cellsize_m);
  for (int r = 0; r < p.rows; ++r)
    for (int c = 0; c < p.cols; ++c)
      g.at(r, c) = z[static_cast<std::size_t>(r % lattice) * static_cast<std::size_t>(lattice) +
                     static_cast<std::size_t>(c % lattice)];
  return g;
}

double zscore_of(const std::vector<double>& v, std::size_t i) {
  const double n = static_cast<double>(v.size());
  double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  var /= n;
  return var > 0.0 ? (v[i] - m) / std::sqrt(var) : 0.0;
}

}  // namespace

Scenario generate_scenario(const ScenarioParams& params) {
  if (params.rows < 64 || params.cols < 64)
    throw std::invalid_argument("generate_scenario: size must be at least 64x64");
  if (!(params.flood_fraction > 0.0 && params.flood_fraction < 0.2))
    throw std::invalid_argument("generate_scenario: flood_fraction must be in (0, 0.2)");

  Scenario sc;
  sc.params = params;

  // DEM: fractal roughness over a plane tilted down toward the south
  // border so the domain drains one way.
  {
    Rng rng(mix_seed(params.seed, 1));
    sc.dem = fractal_grid(params, 60.0, rng);
    const double tilt_per_cell = 1.2;  // m per cell of northing
    for (int r = 0; r < params.rows; ++r)
      for (int c = 0; c < params.cols; ++c)
        sc.dem.at(r, c) += 500.0 + tilt_per_cell * static_cast<double>(params.rows - 1 - r);
  }

  const FlowModel flow = d8_flow(sc.dem);
  const TerrainDerivatives terrain = derive_terrain(sc.dem);
  const auto [twi, spi] = wetness_indices(flow, terrain);
  const BinaryGrid channels = extract_channels(flow, params.channel_min_area_km2);
  const Grid dist_channel = distance_to_channels(channels);
  const WatershedPartition partition = delineate_watersheds(
      flow, extract_channels(flow, params.watershed_min_area_km2));
  const int nw = partition.count;

  // Permanent water: the highest-accumulation river core.
  {
    Grid pw = sc.dem.like(0.0);
    const double core_cells =
        10.0 * params.channel_min_area_km2 * 1e6 / (params.cellsize_m * params.cellsize_m);
    for (std::size_t i = 0; i < pw.size(); ++i) {
      if (flow.accumulation.is_nodata(flow.accumulation.values[i]))
        pw.values[i] = pw.nodata;
      else if (flow.accumulation.values[i] >= core_cells)
        pw.values[i] = 1.0;
    }
    sc.permanent_water = BinaryGrid(std::move(pw));
  }

  // Rainfall: SW-NE gradient, a per-watershed anomaly (the planted runoff
  // driver), and cell noise.
  std::vector<double> bump(static_cast<std::size_t>(nw), 0.0);
  {
    Rng rng(mix_seed(params.seed, 2));
    for (auto& b : bump) b = rng.next_uniform(0.0, 800.0);
    sc.rainfall = sc.dem.like(0.0);
    for (int r = 0; r < params.rows; ++r)
      for (int c = 0; c < params.cols; ++c) {
        const double fx = static_cast<double>(c) / (params.cols - 1);
        const double fy = static_cast<double>(params.rows - 1 - r) / (params.rows - 1);
        double v = 900.0 + 450.0 * (fx + fy);
        const double w = partition.labels.at(r, c);
        if (!partition.labels.is_nodata(w)) v += bump[static_cast<std::size_t>(w)];
        sc.rainfall.at(r, c) = v + rng.next_uniform(0.0, 50.0);
      }
  }

  // Soil clay: smooth fractal field mapped to [10, 45] %.
  {
    Rng rng(mix_seed(params.seed, 3));
    sc.soil_clay = fractal_grid(params, 1.0, rng);
    double lo = sc.soil_clay.values[0], hi = sc.soil_clay.values[0];
    for (double v : sc.soil_clay.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    for (double& v : sc.soil_clay.values) v = 10.0 + 35.0 * (v - lo) / span;
  }

  // LULC classes 1..5 from simple terrain rules.
  {
    sc.lulc = sc.dem.like(1.0);
    std::vector<double> elevs(sc.dem.values);
    std::sort(elevs.begin(), elevs.end());
    const double elev_hi = elevs[static_cast<std::size_t>(0.75 * (elevs.size() - 1))];
    for (int r = 0; r < params.rows; ++r)
      for (int c = 0; c < params.cols; ++c) {
        const double sl = terrain.slope.at(r, c);
        double cls = 1.0;
        if (!terrain.slope.is_nodata(sl) && sl > 30.0)
          cls = 5.0;
        else if (sc.dem.at(r, c) > elev_hi)
          cls = 4.0;
        else if (!dist_channel.is_nodata(dist_channel.at(r, c)) &&
                 dist_channel.at(r, c) <= 2.0 * params.cellsize_m)
          cls = 3.0;
        else if (!terrain.slope.is_nodata(sl) && sl < 8.0)
          cls = 2.0;
        sc.lulc.at(r, c) = cls;
      }
  }

  // Districts: quadrants, ids 0..3.
  {
    sc.districts = sc.dem.like(0.0);
    for (int r = 0; r < params.rows; ++r)
      for (int c = 0; c < params.cols; ++c)
        sc.districts.at(r, c) = (r < params.rows / 2 ? 0.0 : 2.0) + (c < params.cols / 2 ? 0.0 : 1.0);
  }

  // Watershed scores. Local mechanism: wetness. Propagated mechanism: the
  // area-weighted mean rainfall anomaly of strictly-upstream watersheds,
  // mirroring discharge accumulation from tributaries.
  std::vector<double> ws_twi(static_cast<std::size_t>(nw), 0.0);
  {
    std::vector<long> cnt(static_cast<std::size_t>(nw), 0);
    for (int r = 0; r < params.rows; ++r)
      for (int c = 0; c < params.cols; ++c) {
        const double w = partition.labels.at(r, c);
        const double t = twi.at(r, c);
        if (partition.labels.is_nodata(w) || twi.is_nodata(t)) continue;
        ws_twi[static_cast<std::size_t>(w)] += t;
        ++cnt[static_cast<std::size_t>(w)];
      }
    for (std::size_t w = 0; w < ws_twi.size(); ++w)
      if (cnt[w] > 0) ws_twi[w] /= static_cast<double>(cnt[w]);
  }

  // Upstream runoff seen at each watershed: the area-weighted rainfall
  // anomaly of its tributaries, with deeper contributions attenuated by
  // half per hop (nearby tributaries dominate the discharge response).
  std::vector<double> upstream_runoff(static_cast<std::size_t>(nw), 0.0);
  {
    constexpr double kHopDecay = 0.5;
    std::vector<int> pending(static_cast<std::size_t>(nw), 0);
    for (int w = 0; w < nw; ++w)
      if (partition.downstream[static_cast<std::size_t>(w)] >= 0)
        ++pending[static_cast<std::size_t>(partition.downstream[static_cast<std::size_t>(w)])];
    std::vector<int> stack;
    for (int w = 0; w < nw; ++w)
      if (pending[static_cast<std::size_t>(w)] == 0) stack.push_back(w);
    std::vector<double> in_signal(static_cast<std::size_t>(nw), 0.0);
    std::vector<double> in_area(static_cast<std::size_t>(nw), 0.0);
    std::vector<int> order;
    while (!stack.empty()) {
      const int w = stack.back();
      stack.pop_back();
      order.push_back(w);
      const int d = partition.downstream[static_cast<std::size_t>(w)];
      if (d >= 0 && --pending[static_cast<std::size_t>(d)] == 0) stack.push_back(d);
    }
    // order visits every tributary before its downstream neighbor
    for (int w : order) {
      const auto wi = static_cast<std::size_t>(w);
      upstream_runoff[wi] = in_area[wi] > 0.0 ? in_signal[wi] / in_area[wi] : 0.0;
      const int d = partition.downstream[wi];
      if (d >= 0) {
        const auto di = static_cast<std::size_t>(d);
        const double a = partition.areas_km2[wi];
        in_signal[di] += a * (bump[wi] + kHopDecay * upstream_runoff[wi]);
        in_area[di] += a;
      }
    }
  }

  // Flood the top-scoring 45% of watersheds. The upstream term dominates:
  // whether a unit floods hinges mostly on the rainfall anomaly of the
  // watersheds draining into it, which no local feature exposes.
  std::vector<char> flooded(static_cast<std::size_t>(nw), 0);
  {
    Rng rng(mix_seed(params.seed, 4));
    std::vector<double> score(static_cast<std::size_t>(nw), 0.0);
    std::vector<double> up_norm(upstream_runoff);
    for (int w = 0; w < nw; ++w) {
      const auto wi = static_cast<std::size_t>(w);
      score[wi] = 0.3 * zscore_of(ws_twi, wi) + 3.0 * zscore_of(up_norm, wi) +
                  0.25 * rng.next_normal();
    }
    std::vector<double> sorted(score);
    std::sort(sorted.begin(), sorted.end());
    const double cut = sorted[static_cast<std::size_t>(0.55 * (sorted.size() - 1))];
    for (int w = 0; w < nw; ++w)
      if (score[static_cast<std::size_t>(w)] >= cut) flooded[static_cast<std::size_t>(w)] = 1;
  }

  // Plant truth cells inside flooded watersheds at plausible locations
  // (slope and channel-distance limits), preferring high TWI.
  {
    Rng rng(mix_seed(params.seed, 5));
    Grid truth = sc.dem.like(0.0);
    std::vector<std::vector<std::pair<double, std::size_t>>> ranked(
        static_cast<std::size_t>(nw));
    long eligible_total = 0;
    for (int r = 0; r < params.rows; ++r)
      for (int c = 0; c < params.cols; ++c) {
        const double w = partition.labels.at(r, c);
        const double sl = terrain.slope.at(r, c);
        const double t = twi.at(r, c);
        if (partition.labels.is_nodata(w) || terrain.slope.is_nodata(sl) || twi.is_nodata(t))
          continue;
        if (!flooded[static_cast<std::size_t>(w)]) continue;
        if (sl >= params.max_slope_deg) continue;
        if (dist_channel.at(r, c) > params.max_dist_m) continue;
        if (sc.permanent_water.is_one(r, c)) continue;
        ranked[static_cast<std::size_t>(w)].push_back(
            {t + rng.next_uniform(0.0, 3.0), sc.dem.idx(r, c)});
        ++eligible_total;
      }

    const long target = std::lround(params.flood_fraction * sc.dem.count_valid());
    if (eligible_total < target)
      throw CapacityError("generate_scenario: flood_fraction " +
                          std::to_string(params.flood_fraction) + " needs " +
                          std::to_string(target) + " plausible cells but only " +
                          std::to_string(eligible_total) + " exist");

    long planted = 0;
    for (auto& cells : ranked)
      std::sort(cells.begin(), cells.end(),
                [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<char> eligible_flag(truth.size(), 0);
    for (const auto& cells : ranked)
      for (const auto& [score, i] : cells) eligible_flag[i] = 1;

    // Plant contiguous patches around the ranked seeds (a lone pixel would
    // not survive the 3x3 opening in change detection): a seed claims its
    // eligible 8-neighborhood too, until the watershed quota or the global
    // target runs out.
    auto plant = [&](std::size_t i) {
      if (truth.values[i] == 1.0 || planted >= target) return;
      truth.values[i] = 1.0;
      ++planted;
    };
    auto plant_blob = [&](std::size_t i) {
      const int r = static_cast<int>(i) / params.cols;
      const int c = static_cast<int>(i) % params.cols;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= params.rows || cc >= params.cols) continue;
          const std::size_t ni = truth.idx(rr, cc);
          if (eligible_flag[ni]) plant(ni);
        }
    };
    std::vector<std::size_t> cursor(static_cast<std::size_t>(nw), 0);
    for (int w = 0; w < nw && planted < target; ++w) {
      const auto wi = static_cast<std::size_t>(w);
      const long quota = std::lround(static_cast<double>(target) *
                                     static_cast<double>(ranked[wi].size()) /
                                     static_cast<double>(eligible_total));
      const long before = planted;
      while (planted - before < quota && cursor[wi] < ranked[wi].size() && planted < target)
        plant_blob(ranked[wi][cursor[wi]++].second);
    }
    for (int w = 0; planted < target; w = (w + 1) % nw) {
      const auto wi = static_cast<std::size_t>(w);
      bool advanced = false;
      while (cursor[wi] < ranked[wi].size()) {
        const std::size_t i = ranked[wi][cursor[wi]++].second;
        if (truth.values[i] != 1.0) {
          plant_blob(i);
          advanced = true;
          break;
        }
      }
      if (!advanced) {
        bool any_left = false;
        for (int w2 = 0; w2 < nw; ++w2)
          if (cursor[static_cast<std::size_t>(w2)] < ranked[static_cast<std::size_t>(w2)].size())
            any_left = true;
        if (!any_left) break;
      }
    }
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (sc.dem.is_nodata(sc.dem.values[i])) truth.values[i] = truth.nodata;
    sc.truth = BinaryGrid(std::move(truth));
  }

  // Backscatter pair: -4 dB monsoon drop on truth cells, a 0..2 dB drift
  // elsewhere, so the -3 dB rule separates them cleanly.
  {
    Rng rng(mix_seed(params.seed, 6));
    sc.reference_db = sc.dem.like(0.0);
    sc.monsoon_db = sc.dem.like(0.0);
    for (std::size_t i = 0; i < sc.dem.size(); ++i) {
      double ref = -8.0 + rng.next_uniform(-0.5, 0.5);
      if (sc.permanent_water.raster.values[i] == 1.0) ref = -15.0;
      sc.reference_db.values[i] = ref;
      sc.monsoon_db.values[i] =
          sc.truth.raster.values[i] == 1.0 ? ref - 4.0 : ref - rng.next_uniform(0.0, 2.0);
    }
  }

  return sc;
}

std::vector<Asset> demo_assets(const Grid& georef) {
  const double x0 = georef.xll;
  const double x1 = georef.xll + georef.ncols * georef.cellsize;
  const double ymid = georef.yll + 0.5 * georef.nrows * georef.cellsize;
  const double h = georef.nrows * georef.cellsize;
  const double w = georef.ncols * georef.cellsize;

  std::vector<Asset> assets;
  assets.push_back({"road", "crossing_highway",
                    {{x0, ymid}, {x0 + 0.5 * w, ymid + 0.1 * h}, {x1, ymid}}, true});
  assets.push_back({"bridge", "bridge_a", {{x0 + 0.25 * w, georef.yll + 0.25 * h}}, false});
  assets.push_back({"bridge", "bridge_b", {{x0 + 0.50 * w, georef.yll + 0.40 * h}}, false});
  assets.push_back({"hydro", "plant_1", {{x0 + 0.70 * w, georef.yll + 0.20 * h}}, false});
  assets.push_back({"settlement", "village_1", {{x0 + 0.30 * w, georef.yll + 0.60 * h}}, false});
  assets.push_back({"tourist", "lodge_1", {{x0 + 0.60 * w, georef.yll + 0.75 * h}}, false});
  return assets;
}

}  // namespace floodgraph
