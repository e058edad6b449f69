#include "floodgraph/inventory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "floodgraph/rng.hpp"

namespace floodgraph {

BinaryGrid detect_change_raw(const Grid& reference_db, const Grid& monsoon_db,
                             const BinaryGrid& permanent_water, const Grid& slope,
                             const Grid& dist_channel, double threshold_db,
                             double max_slope_deg, double max_dist_m) {
  if (threshold_db >= 0.0)
    throw std::invalid_argument("detect_change: threshold_db must be negative");
  require_same_georef(reference_db, monsoon_db, "detect_change");
  require_same_georef(reference_db, permanent_water.raster, "detect_change");
  require_same_georef(reference_db, slope, "detect_change");
  require_same_georef(reference_db, dist_channel, "detect_change");

  Grid out = reference_db.like(0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ref = reference_db.values[i];
    const double mon = monsoon_db.values[i];
    const double pw = permanent_water.raster.values[i];
    const double sl = slope.values[i];
    const double dc = dist_channel.values[i];
    if (reference_db.is_nodata(ref) || monsoon_db.is_nodata(mon) ||
        permanent_water.raster.is_nodata(pw) || slope.is_nodata(sl) ||
        dist_channel.is_nodata(dc)) {
      out.values[i] = out.nodata;
      continue;
    }
    const bool flagged =
        (mon - ref) <= threshold_db && pw == 0.0 && sl < max_slope_deg && dc <= max_dist_m;
    out.values[i] = flagged ? 1.0 : 0.0;
  }
  return BinaryGrid(std::move(out));
}

BinaryGrid detect_change(const Grid& reference_db, const Grid& monsoon_db,
                         const BinaryGrid& permanent_water, const Grid& slope,
                         const Grid& dist_channel, double threshold_db, double max_slope_deg,
                         double max_dist_m) {
  return binary_open(detect_change_raw(reference_db, monsoon_db, permanent_water, slope,
                                       dist_channel, threshold_db, max_slope_deg, max_dist_m));
}

std::vector<SamplePoint> sample_flood_points(const BinaryGrid& mask, int per_year_cap, int year,
                                             std::uint64_t seed) {
  if (per_year_cap < 1) throw std::invalid_argument("sample_flood_points: cap must be >= 1");
  const Grid& m = mask.raster;
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.values[i] == 1.0) flagged.push_back(i);

  Rng rng(seed);
  const std::size_t take = std::min<std::size_t>(flagged.size(), per_year_cap);
  auto picks = rng.sample_without_replacement(flagged.size(), take);
  std::vector<SamplePoint> out;
  out.reserve(take);
  for (std::size_t p : picks) {
    const std::size_t i = flagged[p];
    const int r = static_cast<int>(i) / m.ncols;
    const int c = static_cast<int>(i) % m.ncols;
    out.push_back({m.x_of_col(c), m.y_of_row(r), 1, year, PointSource::sar});
  }
  return out;
}

std::vector<SamplePoint> sample_nonflood(const BinaryGrid& domain,
                                         const std::vector<SamplePoint>& floods, int ratio,
                                         double buffer_m, std::uint64_t seed) {
  if (ratio < 1) throw std::invalid_argument("sample_nonflood: ratio must be >= 1");
  const Grid& d = domain.raster;
  const double buf2 = buffer_m * buffer_m;

  std::vector<std::size_t> eligible;
  for (int r = 0; r < d.nrows; ++r)
    for (int c = 0; c < d.ncols; ++c) {
      if (d.at(r, c) != 1.0) continue;
      const double x = d.x_of_col(c), y = d.y_of_row(r);
      bool ok = true;
      for (const auto& f : floods) {
        const double dx = x - f.x, dy = y - f.y;
        if (dx * dx + dy * dy < buf2) {
          ok = false;
          break;
        }
      }
      if (ok) eligible.push_back(d.idx(r, c));
    }

  const std::size_t need = static_cast<std::size_t>(ratio) * floods.size();
  if (eligible.size() < need)
    throw CapacityError("sample_nonflood: need " + std::to_string(need) +
                        " eligible cells but only " + std::to_string(eligible.size()) +
                        " lie outside the " + std::to_string(buffer_m) +
                        " m buffer (shortfall " + std::to_string(need - eligible.size()) + ")");

  std::set<int> year_set;
  for (const auto& f : floods) year_set.insert(f.year);
  std::vector<int> years(year_set.begin(), year_set.end());

  Rng rng(seed);
  auto picks = rng.sample_without_replacement(eligible.size(), need);
  std::vector<SamplePoint> out;
  out.reserve(need);
  for (std::size_t p : picks) {
    const std::size_t i = eligible[p];
    const int r = static_cast<int>(i) / d.ncols;
    const int c = static_cast<int>(i) % d.ncols;
    const int year = years.empty() ? 0 : years[rng.next_below(years.size())];
    out.push_back({d.x_of_col(c), d.y_of_row(r), 0, year, PointSource::sar});
  }
  return out;
}

TemporalSplit split_temporal(const Inventory& inv, const YearRange& train_years,
                             const YearRange& test_years) {
  if (train_years.overlaps(test_years))
    throw std::invalid_argument("split_temporal: year ranges overlap");
  TemporalSplit s;
  s.train.ratio = s.test.ratio = inv.ratio;
  s.train.buffer_m = s.test.buffer_m = inv.buffer_m;
  for (const auto& p : inv.points) {
    if (train_years.contains(p.year))
      s.train.points.push_back(p);
    else if (test_years.contains(p.year))
      s.test.points.push_back(p);
    else
      ++s.dropped;
  }
  return s;
}

void store_points_csv(const std::vector<SamplePoint>& points,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "x,y,label,year,source\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d,%d,%s\n", p.x, p.y, p.label, p.year,
                  p.source == PointSource::sar ? "sar" : "supplied");
    out << buf;
  }
}

std::vector<SamplePoint> load_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y,label,year,source", 0) != 0)
    throw ParseError("points csv '" + path.string() + "': bad header '" + line + "'");
  std::vector<SamplePoint> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    SamplePoint p;
    try {
      std::getline(ls, tok, ',');
      p.x = std::stod(tok);
      std::getline(ls, tok, ',');
      p.y = std::stod(tok);
      std::getline(ls, tok, ',');
      p.label = std::stoi(tok);
      std::getline(ls, tok, ',');
      p.year = std::stoi(tok);
      std::getline(ls, tok, ',');
      if (tok == "sar")
        p.source = PointSource::sar;
      else if (tok == "supplied")
        p.source = PointSource::supplied;
      else
        throw std::invalid_argument("bad source");
    } catch (const std::exception&) {
      throw ParseError("points csv '" + path.string() + "' line " + std::to_string(line_no) +
                       ": cannot parse '" + line + "'");
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace floodgraph
