#include "floodgraph/grid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace floodgraph {

int Grid::count_valid() const {
  int n = 0;
  for (double v : values)
    if (v != nodata) ++n;
  return n;
}

void require_same_georef(const Grid& a, const Grid& b, const std::string& what) {
  if (!a.same_georef(b))
    throw GeorefError(what + ": georeference mismatch (" + std::to_string(a.nrows) + "x" +
                      std::to_string(a.ncols) + " cs=" + std::to_string(a.cellsize) + " vs " +
                      std::to_string(b.nrows) + "x" + std::to_string(b.ncols) +
                      " cs=" + std::to_string(b.cellsize) + ")");
}

BinaryGrid::BinaryGrid(Grid g) : raster(std::move(g)) {
  for (double v : raster.values)
    if (v != 0.0 && v != 1.0 && v != raster.nodata)
      throw std::invalid_argument("BinaryGrid: value " + std::to_string(v) +
                                  " is neither 0, 1 nor nodata");
}

int BinaryGrid::count_ones() const {
  int n = 0;
  for (double v : raster.values)
    if (v == 1.0) ++n;
  return n;
}

namespace {

std::string fmt_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Georeferencing fields are written exactly (17 significant digits round-trip
// any double); data values use 6 significant digits.
std::string fmt_exact(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_header_line(std::istream& in, const std::string& key, bool integral,
                         int line_no) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("ascii grid header: unexpected end of file, expected '" + key +
                     "' on line " + std::to_string(line_no));
  std::istringstream ls(line);
  std::string token;
  double value;
  if (!(ls >> token >> value) || lower(token) != key)
    throw ParseError("ascii grid header line " + std::to_string(line_no) + ": expected '" +
                     key + " <value>', got '" + line + "'");
  if (integral && value != std::floor(value))
    throw ParseError("ascii grid header line " + std::to_string(line_no) + ": '" + key +
                     "' must be an integer, got '" + line + "'");
  return value;
}

}  // namespace

Grid load_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");

  Grid g;
  g.ncols = static_cast<int>(parse_header_line(in, "ncols", true, 1));
  g.nrows = static_cast<int>(parse_header_line(in, "nrows", true, 2));
  g.xll = parse_header_line(in, "xllcorner", false, 3);
  g.yll = parse_header_line(in, "yllcorner", false, 4);
  g.cellsize = parse_header_line(in, "cellsize", false, 5);
  g.nodata = parse_header_line(in, "nodata_value", false, 6);
  if (g.nrows < 1 || g.ncols < 1)
    throw ParseError("ascii grid header: nrows and ncols must be >= 1");
  if (g.cellsize <= 0.0) throw ParseError("ascii grid header: cellsize must be > 0");

  const std::size_t expected =
      static_cast<std::size_t>(g.nrows) * static_cast<std::size_t>(g.ncols);
  g.values.reserve(expected);
  double v;
  while (in >> v) {
    if (g.values.size() == expected)
      throw DimensionError("ascii grid '" + path.string() + "': more than " +
                           std::to_string(expected) + " data values");
    g.values.push_back(v);
  }
  if (!in.eof()) {
    std::string bad;
    in.clear();
    in >> bad;
    throw ParseError("ascii grid '" + path.string() + "': unparsable data token '" + bad + "'");
  }
  if (g.values.size() != expected)
    throw DimensionError("ascii grid '" + path.string() + "': expected " +
                         std::to_string(expected) + " data values, found " +
                         std::to_string(g.values.size()));
  return g;
}

void store_ascii_grid(const Grid& grid, const std::filesystem::path& path) {
  if (grid.nrows < 1 || grid.ncols < 1 || grid.cellsize <= 0.0)
    throw std::invalid_argument("store_ascii_grid: invalid grid dimensions");
  if (grid.values.size() != grid.size())
    throw DimensionError("store_ascii_grid: value count does not match nrows*ncols");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");

  out << "ncols " << grid.ncols << "\n";
  out << "nrows " << grid.nrows << "\n";
  out << "xllcorner " << fmt_exact(grid.xll) << "\n";
  out << "yllcorner " << fmt_exact(grid.yll) << "\n";
  out << "cellsize " << fmt_exact(grid.cellsize) << "\n";
  out << "NODATA_value " << fmt_value(grid.nodata) << "\n";
  for (int r = 0; r < grid.nrows; ++r) {
    for (int c = 0; c < grid.ncols; ++c) {
      if (c) out << ' ';
      out << fmt_value(grid.at(r, c));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

BinaryGrid binary_open(const BinaryGrid& mask) {
  const Grid& m = mask.raster;
  auto one_at = [&](int r, int c) {
    return m.in_bounds(r, c) && m.at(r, c) == 1.0;  // nodata and off-grid count as 0
  };
  Grid eroded = m.like(0.0);
  for (int r = 0; r < m.nrows; ++r)
    for (int c = 0; c < m.ncols; ++c) {
      bool all = true;
      for (int dr = -1; dr <= 1 && all; ++dr)
        for (int dc = -1; dc <= 1 && all; ++dc)
          if (!one_at(r + dr, c + dc)) all = false;
      eroded.at(r, c) = all ? 1.0 : 0.0;
    }
  Grid opened = m.like(0.0);
  for (int r = 0; r < m.nrows; ++r)
    for (int c = 0; c < m.ncols; ++c) {
      if (m.is_nodata(m.at(r, c))) {
        opened.at(r, c) = m.nodata;
        continue;
      }
      bool any = false;
      for (int dr = -1; dr <= 1 && !any; ++dr)
        for (int dc = -1; dc <= 1 && !any; ++dc) {
          int rr = r + dr, cc = c + dc;
          if (m.in_bounds(rr, cc) && eroded.at(rr, cc) == 1.0) any = true;
        }
      opened.at(r, c) = any ? 1.0 : 0.0;
    }
  return BinaryGrid(std::move(opened));
}

namespace {

// Felzenszwalb-Huttenlocher exact squared distance transform of a 1-D
// sampled function, f in squared cell units.
void sedt_1d(const std::vector<double>& f, std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    for (;;) {
      s = ((f[q] + static_cast<double>(q) * q) - (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
          (2.0 * (q - v[k]));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double d = static_cast<double>(q) - v[k];
    out[q] = d * d + f[v[k]];
  }
}

}  // namespace

Grid euclidean_distance(const BinaryGrid& mask) {
  const Grid& m = mask.raster;
  if (mask.count_ones() == 0) throw std::domain_error("euclidean_distance: no target cells");

  // Finite "no target" sentinel keeps all squared distances exact integers
  // (< 2^53) while dominating any real squared distance on the grid.
  const double far = 1e12;
  std::vector<double> colbuf(static_cast<std::size_t>(m.nrows));
  std::vector<double> coldist(static_cast<std::size_t>(m.nrows));
  std::vector<double> work(m.size(), far);
  for (int c = 0; c < m.ncols; ++c) {
    for (int r = 0; r < m.nrows; ++r) colbuf[r] = (m.at(r, c) == 1.0) ? 0.0 : far;
    sedt_1d(colbuf, coldist);
    for (int r = 0; r < m.nrows; ++r) work[m.idx(r, c)] = coldist[r];
  }
  Grid out = m.like(0.0);
  std::vector<double> rowbuf(static_cast<std::size_t>(m.ncols));
  std::vector<double> rowdist(static_cast<std::size_t>(m.ncols));
  for (int r = 0; r < m.nrows; ++r) {
    for (int c = 0; c < m.ncols; ++c) rowbuf[c] = work[m.idx(r, c)];
    sedt_1d(rowbuf, rowdist);
    for (int c = 0; c < m.ncols; ++c) {
      if (m.is_nodata(m.at(r, c)))
        out.at(r, c) = m.nodata;
      else
        out.at(r, c) = std::sqrt(rowdist[c]) * m.cellsize;
    }
  }
  return out;
}

void store_pgm(const Grid& grid, const std::filesystem::path& path, double lo, double hi) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const double span = (hi > lo) ? hi - lo : 1.0;
  out << "P2\n" << grid.ncols << ' ' << grid.nrows << "\n255\n";
  for (int r = 0; r < grid.nrows; ++r) {
    for (int c = 0; c < grid.ncols; ++c) {
      int gray = 0;
      double v = grid.at(r, c);
      if (!grid.is_nodata(v)) {
        double t = (v - lo) / span;
        t = std::clamp(t, 0.0, 1.0);
        gray = static_cast<int>(std::lround(t * 255.0));
      }
      if (c) out << ' ';
      out << gray;
    }
    out << '\n';
  }
}

}  // namespace floodgraph
