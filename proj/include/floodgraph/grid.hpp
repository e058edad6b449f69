#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "floodgraph/util.hpp"

namespace floodgraph {

/// Georeferenced single-band raster. Values are stored row-major with
/// row 0 the northernmost row, matching the ESRI ASCII file layout.
/// Cell (r, c) has its center at
///   x = xll + (c + 0.5) * cellsize
///   y = yll + (nrows - r - 0.5) * cellsize
struct Grid {
  int nrows = 0;
  int ncols = 0;
  double xll = 0.0;       // lower-left corner easting (m)
  double yll = 0.0;       // lower-left corner northing (m)
  double cellsize = 1.0;  // m
  double nodata = -9999.0;
  std::vector<double> values;

  Grid() = default;
  Grid(int nrows_, int ncols_, double xll_, double yll_, double cellsize_,
       double nodata_ = -9999.0, double fill = 0.0)
      : nrows(nrows_),
        ncols(ncols_),
        xll(xll_),
        yll(yll_),
        cellsize(cellsize_),
        nodata(nodata_),
        values(static_cast<std::size_t>(nrows_) * static_cast<std::size_t>(ncols_), fill) {}

  /// Blank grid sharing this grid's georeferencing.
  Grid like(double fill) const { return Grid(nrows, ncols, xll, yll, cellsize, nodata, fill); }

  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(ncols) +
           static_cast<std::size_t>(c);
  }
  double& at(int r, int c) { return values[idx(r, c)]; }
  double at(int r, int c) const { return values[idx(r, c)]; }

  bool in_bounds(int r, int c) const { return r >= 0 && r < nrows && c >= 0 && c < ncols; }
  bool is_nodata(double v) const { return v == nodata; }
  bool valid_at(int r, int c) const { return !is_nodata(at(r, c)); }

  double x_of_col(int c) const { return xll + (c + 0.5) * cellsize; }
  double y_of_row(int r) const { return yll + (nrows - r - 0.5) * cellsize; }
  /// Cell containing a point; may be out of bounds (caller checks).
  int col_of_x(double x) const { return static_cast<int>(std::floor((x - xll) / cellsize)); }
  int row_of_y(double y) const {
    return nrows - 1 - static_cast<int>(std::floor((y - yll) / cellsize));
  }

  bool same_georef(const Grid& other) const {
    return nrows == other.nrows && ncols == other.ncols && xll == other.xll &&
           yll == other.yll && cellsize == other.cellsize;
  }

  std::size_t size() const { return values.size(); }
  int count_valid() const;
};

/// Throws GeorefError unless the two grids share georeferencing exactly.
void require_same_georef(const Grid& a, const Grid& b, const std::string& what);

/// Raster mask: values restricted to {0, 1, nodata}.
struct BinaryGrid {
  Grid raster;

  BinaryGrid() = default;
  explicit BinaryGrid(Grid g);  // validates the three-value invariant

  bool is_one(int r, int c) const { return raster.at(r, c) == 1.0; }
  bool in_bounds(int r, int c) const { return raster.in_bounds(r, c); }
  int count_ones() const;
};

// --- ESRI ASCII grid interchange -------------------------------------------
//
// Header tokens in canonical order: ncols nrows xllcorner yllcorner cellsize
// NODATA_value, then nrows whitespace-separated data rows, top row first.
// Data values are written with 6 significant digits; store-then-load is the
// identity at that precision, and load-then-store of our own files is
// byte-identical.

Grid load_ascii_grid(const std::filesystem::path& path);
void store_ascii_grid(const Grid& grid, const std::filesystem::path& path);

// --- Morphology and distance ------------------------------------------------

/// Morphological opening (3x3 erosion then 3x3 dilation). Nodata cells are
/// treated as 0 for structuring and restored as nodata in the output.
BinaryGrid binary_open(const BinaryGrid& mask);

/// Exact Euclidean distance (meters) from every cell center to the nearest
/// 1-cell center. 1-cells hold 0; nodata propagates. Throws
/// std::domain_error when the mask has no 1-cells.
Grid euclidean_distance(const BinaryGrid& mask);

// --- Rendering ---------------------------------------------------------------

/// 8-bit grayscale PGM (P2) heatmap. Values are scaled linearly from
/// [lo, hi] to [0, 255]; nodata renders as 0.
void store_pgm(const Grid& grid, const std::filesystem::path& path, double lo, double hi);

}  // namespace floodgraph
