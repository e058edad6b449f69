#include "floodgraph/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>

namespace floodgraph {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;

inline double deg(double rad) { return rad * (180.0 / kPi); }

}  // namespace

TerrainDerivatives derive_terrain(const Grid& dem) {
  if (dem.nrows < 3 || dem.ncols < 3)
    throw DimensionError("derive_terrain: grid must be at least 3x3");
  const double L = dem.cellsize;

  TerrainDerivatives t{dem.like(dem.nodata), dem.like(dem.nodata), dem.like(dem.nodata),
                       dem.like(dem.nodata), dem.like(dem.nodata)};

  for (int r = 1; r < dem.nrows - 1; ++r) {
    for (int c = 1; c < dem.ncols - 1; ++c) {
      double z[3][3];
      bool ok = true;
      for (int dr = -1; dr <= 1 && ok; ++dr)
        for (int dc = -1; dc <= 1 && ok; ++dc) {
          z[dr + 1][dc + 1] = dem.at(r + dr, c + dc);
          if (dem.is_nodata(z[dr + 1][dc + 1])) ok = false;
        }
      if (!ok) continue;  // nodata propagates

      // Horn gradient; x east, y north (row index grows southward).
      const double gx =
          ((z[0][2] + 2.0 * z[1][2] + z[2][2]) - (z[0][0] + 2.0 * z[1][0] + z[2][0])) / (8.0 * L);
      const double gy =
          ((z[0][0] + 2.0 * z[0][1] + z[0][2]) - (z[2][0] + 2.0 * z[2][1] + z[2][2])) / (8.0 * L);
      t.slope.at(r, c) = deg(std::atan(std::hypot(gx, gy)));
      if (gx == 0.0 && gy == 0.0) {
        // flat: aspect undefined
      } else {
        double a = deg(std::atan2(-gx, -gy));  // compass angle of the downslope vector
        if (a < 0.0) a += 360.0;
        if (a >= 360.0) a -= 360.0;
        t.aspect.at(r, c) = a;
      }

      // Least-squares quadratic fit z ~ a x^2 + b y^2 + cxy + dx + ey + f
      // over the 3x3 window (x east, y north, spacing L).
      double col_sum = 0.0, row_sum = 0.0, total = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const double zv = z[dr + 1][dc + 1];
          total += zv;
          if (dc != 0) col_sum += zv;
          if (dr != 0) row_sum += zv;
          sxy += zv * (dc * L) * (-dr * L);
          sx += zv * (dc * L);
          sy += zv * (-dr * L);
        }
      const double L2 = L * L;
      const double u = (col_sum + row_sum - (4.0 / 3.0) * total) / (2.0 * L2);  // a + b
      const double w = (col_sum - row_sum) / (2.0 * L2);                        // a - b
      const double fit_a = 0.5 * (u + w);
      const double fit_b = 0.5 * (u - w);
      const double p = sx / (6.0 * L2);
      const double q = sy / (6.0 * L2);
      const double rxx = 2.0 * fit_a;
      const double tyy = 2.0 * fit_b;
      const double sxy2 = sxy / (4.0 * L2 * L2);

      const double g2 = p * p + q * q;
      double plan = 0.0, prof = 0.0;
      if (g2 > 0.0) {
        const double m = 1.0 + g2;
        plan = (q * q * rxx - 2.0 * p * q * sxy2 + p * p * tyy) / (g2 * std::sqrt(m));
        prof = -(p * p * rxx + 2.0 * p * q * sxy2 + q * q * tyy) / (g2 * std::pow(m, 1.5));
      }
      t.plan_curv.at(r, c) = plan;
      t.prof_curv.at(r, c) = prof;

      double adiff = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          if (dr || dc) adiff += std::abs(z[1][1] - z[dr + 1][dc + 1]);
      t.tri.at(r, c) = adiff / 8.0;
    }
  }
  return t;
}

namespace {

struct HeapCell {
  double elev;
  std::size_t idx;
  bool operator>(const HeapCell& o) const {
    return elev != o.elev ? elev > o.elev : idx > o.idx;
  }
};

}  // namespace

FlowModel d8_flow(const Grid& dem) {
  const int nr = dem.nrows, nc = dem.ncols;
  const double L = dem.cellsize;
  if (dem.count_valid() == 0) throw std::domain_error("d8_flow: all-nodata grid");

  auto valid = [&](int r, int c) { return dem.in_bounds(r, c) && dem.valid_at(r, c); };
  auto is_border = [&](int r, int c) {
    if (r == 0 || c == 0 || r == nr - 1 || c == nc - 1) return true;
    for (int k = 0; k < 8; ++k)
      if (!dem.valid_at(r + kD8RowOff[k], c + kD8ColOff[k])) return true;
    return false;
  };

  // Priority-flood fill (Barnes 2014): flood inward from the domain border,
  // raising every cell to at least the level it was reached at.
  Grid filled = dem;
  std::vector<char> visited(dem.size(), 0);
  std::priority_queue<HeapCell, std::vector<HeapCell>, std::greater<HeapCell>> heap;
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c)
      if (valid(r, c) && is_border(r, c)) {
        visited[dem.idx(r, c)] = 1;
        heap.push({dem.at(r, c), dem.idx(r, c)});
      }
  while (!heap.empty()) {
    HeapCell top = heap.top();
    heap.pop();
    const int r = static_cast<int>(top.idx) / nc;
    const int c = static_cast<int>(top.idx) % nc;
    for (int k = 0; k < 8; ++k) {
      const int rr = r + kD8RowOff[k], cc = c + kD8ColOff[k];
      if (!valid(rr, cc) || visited[dem.idx(rr, cc)]) continue;
      visited[dem.idx(rr, cc)] = 1;
      double f = std::max(dem.at(rr, cc), top.elev);
      filled.at(rr, cc) = f;
      heap.push({f, dem.idx(rr, cc)});
    }
  }

  // Steepest-descent directions on the filled surface.
  Grid dirs = dem.like(dem.nodata);
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c) {
      if (!valid(r, c)) continue;
      double best = 0.0;
      int best_k = -1;
      for (int k = 0; k < 8; ++k) {
        const int rr = r + kD8RowOff[k], cc = c + kD8ColOff[k];
        if (!valid(rr, cc)) continue;
        const double dist = (kD8RowOff[k] && kD8ColOff[k]) ? L * kSqrt2 : L;
        const double drop = (filled.at(r, c) - filled.at(rr, cc)) / dist;
        if (drop > best) {
          best = drop;
          best_k = k;
        }
      }
      if (best_k >= 0) dirs.at(r, c) = best_k + 1;
    }

  // Flat resolution: cells without a strict descent drain off-domain when on
  // the border, otherwise toward the nearest already-draining cell on the
  // same filled level (BFS, deterministic order).
  std::deque<std::size_t> bfs;
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c) {
      if (!valid(r, c)) continue;
      if (!dirs.is_nodata(dirs.at(r, c))) {
        bfs.push_back(dem.idx(r, c));
      } else if (is_border(r, c)) {
        dirs.at(r, c) = kDirOutlet;
        bfs.push_back(dem.idx(r, c));
      }
    }
  while (!bfs.empty()) {
    const std::size_t i = bfs.front();
    bfs.pop_front();
    const int r = static_cast<int>(i) / nc;
    const int c = static_cast<int>(i) % nc;
    for (int k = 0; k < 8; ++k) {
      const int rr = r + kD8RowOff[k], cc = c + kD8ColOff[k];
      if (!valid(rr, cc) || !dirs.is_nodata(dirs.at(rr, cc))) continue;
      if (filled.at(rr, cc) != filled.at(r, c)) continue;
      // neighbor k of (rr,cc) pointing back at (r,c) is the opposite code
      dirs.at(rr, cc) = ((k + 4) % 8) + 1;
      bfs.push_back(dem.idx(rr, cc));
    }
  }

  // Accumulation by Kahn's algorithm over the direction forest.
  Grid acc = dem.like(dem.nodata);
  std::vector<int> indeg(dem.size(), 0);
  auto target_of = [&](int r, int c) -> std::size_t {
    const int k = static_cast<int>(dirs.at(r, c)) - 1;
    return dem.idx(r + kD8RowOff[k], c + kD8ColOff[k]);
  };
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c) {
      if (!valid(r, c)) continue;
      acc.at(r, c) = 1.0;
      if (dirs.at(r, c) > 0) ++indeg[target_of(r, c)];
    }
  std::deque<std::size_t> topo;
  for (std::size_t i = 0; i < dem.size(); ++i)
    if (!dem.is_nodata(dem.values[i]) && indeg[i] == 0) topo.push_back(i);
  std::size_t processed = 0;
  while (!topo.empty()) {
    const std::size_t i = topo.front();
    topo.pop_front();
    ++processed;
    const int r = static_cast<int>(i) / nc;
    const int c = static_cast<int>(i) % nc;
    if (dirs.at(r, c) > 0) {
      const std::size_t t = target_of(r, c);
      acc.values[t] += acc.values[i];
      if (--indeg[t] == 0) topo.push_back(t);
    }
  }
  if (processed != static_cast<std::size_t>(dem.count_valid()))
    throw std::logic_error("d8_flow: direction graph is not acyclic");

  Grid spec_area = dem.like(dem.nodata);
  for (std::size_t i = 0; i < dem.size(); ++i)
    if (!acc.is_nodata(acc.values[i])) spec_area.values[i] = acc.values[i] * L;

  return FlowModel{std::move(dirs), std::move(acc), std::move(spec_area), std::move(filled)};
}

std::pair<Grid, Grid> wetness_indices(const FlowModel& flow, const TerrainDerivatives& terrain) {
  require_same_georef(flow.specific_area, terrain.slope, "wetness_indices");
  const Grid& as = flow.specific_area;
  const Grid& slope = terrain.slope;
  Grid twi = as.like(as.nodata);
  Grid spi = as.like(as.nodata);
  for (std::size_t i = 0; i < as.size(); ++i) {
    if (as.is_nodata(as.values[i]) || slope.is_nodata(slope.values[i])) continue;
    const double tan_b = std::tan(slope.values[i] * kPi / 180.0);
    twi.values[i] = std::log(as.values[i] / std::max(tan_b, kSlopeFloor));
    spi.values[i] = as.values[i] * tan_b;
  }
  return {std::move(twi), std::move(spi)};
}

BinaryGrid extract_channels(const FlowModel& flow, double min_area_km2) {
  if (min_area_km2 <= 0.0)
    throw std::invalid_argument("extract_channels: min_area_km2 must be > 0");
  const Grid& acc = flow.accumulation;
  const double min_cells = min_area_km2 * 1e6 / (acc.cellsize * acc.cellsize);
  Grid ch = acc.like(0.0);
  int n = 0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc.is_nodata(acc.values[i])) {
      ch.values[i] = ch.nodata;
    } else if (acc.values[i] >= min_cells) {
      ch.values[i] = 1.0;
      ++n;
    }
  }
  if (n == 0)
    throw std::domain_error("extract_channels: threshold " + std::to_string(min_area_km2) +
                            " km^2 exceeds every contributing area; channel network empty");
  return BinaryGrid(std::move(ch));
}

WatershedPartition delineate_watersheds(const FlowModel& flow, const BinaryGrid& channels) {
  const Grid& dirs = flow.directions;
  require_same_georef(dirs, channels.raster, "delineate_watersheds");
  if (channels.count_ones() == 0)
    throw std::domain_error("delineate_watersheds: empty channel network");
  const int nr = dirs.nrows, nc = dirs.ncols;

  auto valid = [&](int r, int c) { return dirs.in_bounds(r, c) && dirs.valid_at(r, c); };
  auto next_of = [&](int r, int c, int& rr, int& cc) -> bool {
    const int code = static_cast<int>(dirs.at(r, c));
    if (code <= 0) return false;
    rr = r + kD8RowOff[code - 1];
    cc = c + kD8ColOff[code - 1];
    return true;
  };

  // Channel in-degree: how many channel cells drain directly into each cell.
  std::vector<int> chan_in(dirs.size(), 0);
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c) {
      if (!valid(r, c) || !channels.is_one(r, c)) continue;
      int rr, cc;
      if (next_of(r, c, rr, cc) && channels.is_one(rr, cc)) ++chan_in[dirs.idx(rr, cc)];
    }

  // Segments start at headwaters (0 channel inflows) and junctions (>= 2);
  // each extends downstream until the next junction or the outlet.
  constexpr int kUnlabeled = -1;
  std::vector<int> seg(dirs.size(), kUnlabeled);
  std::vector<std::size_t> seg_end;  // last cell of each segment
  int nseg = 0;
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nc; ++c) {
      if (!valid(r, c) || !channels.is_one(r, c)) continue;
      if (chan_in[dirs.idx(r, c)] == 1) continue;
      const int id = nseg++;
      int cr = r, ccol = c;
      for (;;) {
        seg[dirs.idx(cr, ccol)] = id;
        int rr, cc;
        if (!next_of(cr, ccol, rr, cc)) break;                    // outlet
        if (!channels.is_one(rr, cc)) break;                      // leaves network (defensive)
        if (chan_in[dirs.idx(rr, cc)] != 1) break;                // next cell starts a segment
        cr = rr;
        ccol = cc;
      }
      seg_end.push_back(dirs.idx(cr, ccol));
    }

  // Downstream relation between segments.
  std::vector<int> downstream(nseg, -1);
  for (int id = 0; id < nseg; ++id) {
    const int r = static_cast<int>(seg_end[id]) / nc;
    const int c = static_cast<int>(seg_end[id]) % nc;
    int rr, cc;
    if (next_of(r, c, rr, cc) && channels.is_one(rr, cc)) downstream[id] = seg[dirs.idx(rr, cc)];
  }

  // Channel cells in index order, for the nearest-channel fallback below.
  std::vector<std::size_t> chan_cells;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    if (!dirs.is_nodata(dirs.values[i]) && channels.raster.values[i] == 1.0)
      chan_cells.push_back(i);
  auto nearest_segment = [&](std::size_t from) {
    const double fr = static_cast<double>(from / nc), fc = static_cast<double>(from % nc);
    double best = 0.0;
    int best_seg = -1;
    for (std::size_t i : chan_cells) {
      const double dr = static_cast<double>(i / nc) - fr;
      const double dc = static_cast<double>(i % nc) - fc;
      const double d2 = dr * dr + dc * dc;
      if (best_seg < 0 || d2 < best) {
        best = d2;
        best_seg = seg[i];
      }
    }
    return best_seg;
  };

  // Label every valid cell with the segment its D8 path first reaches,
  // memoized along the walked path. A path that exits the domain without
  // touching the network adopts the segment nearest its outlet cell.
  Grid labels = dirs.like(dirs.nodata);
  std::vector<int> label(dirs.size(), kUnlabeled);
  std::vector<std::size_t> path;
  for (std::size_t start = 0; start < dirs.size(); ++start) {
    if (dirs.is_nodata(dirs.values[start]) || label[start] != kUnlabeled) continue;
    path.clear();
    std::size_t cur = start;
    int found = kUnlabeled;
    for (;;) {
      if (label[cur] != kUnlabeled) {
        found = label[cur];
        break;
      }
      if (seg[cur] != kUnlabeled) {
        found = seg[cur];
        break;
      }
      path.push_back(cur);
      const int r = static_cast<int>(cur) / nc;
      const int c = static_cast<int>(cur) % nc;
      int rr, cc;
      if (!next_of(r, c, rr, cc)) {
        found = nearest_segment(cur);
        break;
      }
      cur = dirs.idx(rr, cc);
    }
    for (std::size_t i : path) label[i] = found;
    label[start] = found;
  }

  WatershedPartition part;
  part.count = nseg;
  part.areas_km2.assign(nseg, 0.0);
  part.downstream = std::move(downstream);
  const double cell_km2 = dirs.cellsize * dirs.cellsize / 1e6;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (dirs.is_nodata(dirs.values[i])) continue;
    if (label[i] == kUnlabeled) throw std::logic_error("delineate_watersheds: unlabeled cell");
    labels.values[i] = label[i];
    part.areas_km2[static_cast<std::size_t>(label[i])] += cell_km2;
  }
  part.labels = std::move(labels);
  return part;
}

Grid distance_to_channels(const BinaryGrid& channels) { return euclidean_distance(channels); }

}  // namespace floodgraph
