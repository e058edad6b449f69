#include "floodgraph/risk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace floodgraph {

SusceptibilityClass classify_value(double p, const ClassBoundaries& bounds) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("classify: value " + std::to_string(p) + " outside [0, 1]");
  if (p < bounds.low_max) return SusceptibilityClass::Low;
  if (p < bounds.moderate_max) return SusceptibilityClass::Moderate;
  if (p < bounds.high_max) return SusceptibilityClass::High;
  return SusceptibilityClass::VeryHigh;  // the 0.70 boundary classifies upward
}

Grid classify(const Grid& susceptibility, const ClassBoundaries& bounds) {
  Grid out = susceptibility.like(susceptibility.nodata);
  for (std::size_t i = 0; i < susceptibility.size(); ++i) {
    const double p = susceptibility.values[i];
    if (susceptibility.is_nodata(p)) continue;
    out.values[i] = static_cast<double>(classify_value(p, bounds));
  }
  return out;
}

Grid decision_tiers(const Grid& class_map, const Grid& width_map, double narrow_max) {
  require_same_georef(class_map, width_map, "decision_tiers");
  Grid out = class_map.like(class_map.nodata);
  for (std::size_t i = 0; i < class_map.size(); ++i) {
    const double cv = class_map.values[i];
    const double wv = width_map.values[i];
    if (class_map.is_nodata(cv) || width_map.is_nodata(wv)) continue;
    const auto cls = static_cast<SusceptibilityClass>(static_cast<int>(cv));
    int tier;
    switch (cls) {
      case SusceptibilityClass::VeryHigh: tier = wv < narrow_max ? 1 : 3; break;
      case SusceptibilityClass::High: tier = 2; break;
      default: tier = 4; break;
    }
    out.values[i] = tier;
  }
  return out;
}

ZoneAreas zone_area_summary(const Grid& class_map) {
  ZoneAreas zones;
  const double cell_km2 = class_map.cellsize * class_map.cellsize / 1e6;
  std::array<long, 4> counts{};
  long total = 0;
  for (double v : class_map.values) {
    if (class_map.is_nodata(v)) continue;
    const int c = static_cast<int>(v);
    if (c < 0 || c > 3)
      throw std::invalid_argument("zone_area_summary: bad class code " + std::to_string(v));
    ++counts[static_cast<std::size_t>(c)];
    ++total;
  }
  zones.total_km2 = static_cast<double>(total) * cell_km2;
  for (std::size_t c = 0; c < 4; ++c) {
    zones.km2[c] = static_cast<double>(counts[c]) * cell_km2;
    zones.percent[c] =
        total > 0 ? 100.0 * static_cast<double>(counts[c]) / static_cast<double>(total) : 0.0;
  }
  return zones;
}

namespace {

std::vector<std::pair<double, double>> parse_wkt_points(const std::string& body,
                                                        const std::string& context) {
  std::vector<std::pair<double, double>> pts;
  std::string item;
  std::istringstream ss(body);
  while (std::getline(ss, item, ',')) {
    std::istringstream ps(item);
    double x, y;
    if (!(ps >> x >> y))
      throw ParseError("assets csv: bad coordinate pair '" + item + "' in " + context);
    pts.push_back({x, y});
  }
  return pts;
}

}  // namespace

std::vector<Asset> load_assets_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line.rfind("category,name,geometry", 0) != 0)
    throw ParseError("assets csv '" + path.string() + "': bad header '" + line + "'");

  static const std::set<std::string> kCategories = {"road", "bridge", "hydro", "settlement",
                                                    "tourist"};
  std::vector<Asset> assets;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = "line " + std::to_string(line_no);
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ParseError("assets csv " + ctx + ": expected category,name,geometry");
    Asset a;
    a.category = line.substr(0, c1);
    a.name = line.substr(c1 + 1, c2 - c1 - 1);
    std::string geom = line.substr(c2 + 1);
    if (!kCategories.count(a.category))
      throw ParseError("assets csv " + ctx + ": unknown category '" + a.category + "'");

    const auto open = geom.find('(');
    const auto close = geom.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      throw ParseError("assets csv " + ctx + ": bad geometry '" + geom + "'");
    const std::string kind = geom.substr(0, open);
    const std::string body = geom.substr(open + 1, close - open - 1);
    if (kind == "POINT") {
      a.is_line = false;
      a.geometry = parse_wkt_points(body, ctx);
      if (a.geometry.size() != 1)
        throw ParseError("assets csv " + ctx + ": POINT needs exactly one coordinate pair");
    } else if (kind == "LINESTRING") {
      a.is_line = true;
      a.geometry = parse_wkt_points(body, ctx);
      if (a.geometry.size() < 2)
        throw ParseError("assets csv " + ctx + ": LINESTRING needs at least two points");
    } else {
      throw ParseError("assets csv " + ctx + ": unknown geometry '" + kind + "'");
    }
    if (a.is_line && a.category != "road")
      throw ParseError("assets csv " + ctx + ": polylines are only valid for roads");
    assets.push_back(std::move(a));
  }
  return assets;
}

void store_assets_csv(const std::vector<Asset>& assets, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "category,name,geometry\n";
  char buf[64];
  for (const auto& a : assets) {
    out << a.category << ',' << a.name << ',' << (a.is_line ? "LINESTRING(" : "POINT(");
    for (std::size_t i = 0; i < a.geometry.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.17g %.17g", i ? ", " : "", a.geometry[i].first,
                    a.geometry[i].second);
      out << buf;
    }
    out << ")\n";
  }
}

std::map<std::string, ExposureEntry> exposure_overlay(const std::vector<Asset>& assets,
                                                      const Grid& class_map) {
  auto exposed_at = [&](double x, double y) {
    const int r = class_map.row_of_y(y);
    const int c = class_map.col_of_x(x);
    if (!class_map.in_bounds(r, c) || !class_map.valid_at(r, c)) return false;
    const int cls = static_cast<int>(class_map.at(r, c));
    return cls == static_cast<int>(SusceptibilityClass::High) ||
           cls == static_cast<int>(SusceptibilityClass::VeryHigh);
  };

  std::map<std::string, ExposureEntry> report;
  const double step = class_map.cellsize / 2.0;
  for (const auto& a : assets) {
    ExposureEntry& e = report[a.category];
    if (!a.is_line) {
      ++e.points_total;
      if (exposed_at(a.geometry[0].first, a.geometry[0].second)) ++e.points_exposed;
      continue;
    }
    for (std::size_t s = 0; s + 1 < a.geometry.size(); ++s) {
      const auto [x0, y0] = a.geometry[s];
      const auto [x1, y1] = a.geometry[s + 1];
      const double seg_len = std::hypot(x1 - x0, y1 - y0);
      if (seg_len == 0.0) continue;
      e.line_km_total += seg_len / 1000.0;
      const auto nsteps = std::max<long>(1, static_cast<long>(std::ceil(seg_len / step)));
      const double ds = seg_len / static_cast<double>(nsteps);
      for (long i = 0; i < nsteps; ++i) {
        const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(nsteps);
        if (exposed_at(x0 + t * (x1 - x0), y0 + t * (y1 - y0))) e.line_km_exposed += ds / 1000.0;
      }
    }
  }
  return report;
}

void store_exposure_json(const std::map<std::string, ExposureEntry>& exposure,
                         const std::filesystem::path& path) {
  nlohmann::json j;
  for (const auto& [cat, e] : exposure) {
    j[cat] = {{"points_total", e.points_total},
              {"points_exposed", e.points_exposed},
              {"line_km_total", e.line_km_total},
              {"line_km_exposed", e.line_km_exposed}};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << '\n';
}

}  // namespace floodgraph
