#include "floodgraph/factors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace floodgraph {

void FactorStack::validate() const {
  for (int j = 1; j < kNumFactors; ++j)
    require_same_georef(grids[0], grids[j], std::string("factor stack: ") + kFactorNames[j]);
}

SampleTable extract_features(const FactorStack& stack, const std::vector<SamplePoint>& points) {
  stack.validate();
  const Grid& ref = stack.grids[0];
  SampleTable table;
  table.rows.reserve(points.size());
  for (const auto& p : points) {
    const int r = ref.row_of_y(p.y);
    const int c = ref.col_of_x(p.x);
    if (!ref.in_bounds(r, c)) {
      ++table.dropped;
      continue;
    }
    SampleRow row;
    row.point = p;
    bool ok = true;
    for (int j = 0; j < kNumFactors; ++j) {
      const double v = stack.grids[j].at(r, c);
      if (stack.grids[j].is_nodata(v)) {
        ok = false;
        break;
      }
      row.features[j] = v;
    }
    if (ok)
      table.rows.push_back(row);
    else
      ++table.dropped;
  }
  return table;
}

namespace {

std::vector<int> continuous_factors() {
  std::vector<int> idx;
  for (int j = 0; j < kNumFactors; ++j)
    if (!FactorStack::is_categorical(j)) idx.push_back(j);
  return idx;
}

}  // namespace

PearsonReport pearson_screen(const SampleTable& table, double threshold) {
  const std::size_t n = table.rows.size();
  if (n < 3) throw std::invalid_argument("pearson_screen: need at least 3 rows");
  const auto cont = continuous_factors();

  std::vector<double> mean(cont.size(), 0.0), var(cont.size(), 0.0);
  for (std::size_t k = 0; k < cont.size(); ++k) {
    for (const auto& row : table.rows) mean[k] += row.features[cont[k]];
    mean[k] /= static_cast<double>(n);
    for (const auto& row : table.rows) {
      const double d = row.features[cont[k]] - mean[k];
      var[k] += d * d;
    }
  }

  PearsonReport report;
  for (std::size_t k = 0; k < cont.size(); ++k)
    if (var[k] == 0.0) report.zero_variance.push_back(cont[k]);

  for (std::size_t a = 0; a < cont.size(); ++a) {
    for (std::size_t b = a + 1; b < cont.size(); ++b) {
      if (var[a] == 0.0 || var[b] == 0.0) continue;  // undefined, warned above
      double cov = 0.0;
      for (const auto& row : table.rows)
        cov += (row.features[cont[a]] - mean[a]) * (row.features[cont[b]] - mean[b]);
      const double r = cov / std::sqrt(var[a] * var[b]);
      if (std::abs(r) > threshold) report.flagged.push_back({cont[a], cont[b], r});
    }
  }
  return report;
}

VifReport vif_screen(const SampleTable& table, double threshold) {
  const auto cont = continuous_factors();
  const std::size_t n = table.rows.size();
  if (n <= cont.size() + 1)
    throw std::invalid_argument("vif_screen: need more rows than continuous factors + 1");

  VifReport report;
  report.vif.fill(std::numeric_limits<double>::quiet_NaN());

  // rank tolerance for the collinearity decision
  constexpr double kRankTol = 1e-10;
  const double inf = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd all(n, cont.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < cont.size(); ++k)
      all(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          table.rows[i].features[cont[k]];

  for (std::size_t k = 0; k < cont.size(); ++k) {
    Eigen::VectorXd y = all.col(static_cast<Eigen::Index>(k));
    Eigen::MatrixXd X(n, cont.size());  // others + intercept
    Eigen::Index col = 0;
    for (std::size_t m = 0; m < cont.size(); ++m) {
      if (m == k) continue;
      X.col(col++) = all.col(static_cast<Eigen::Index>(m));
    }
    X.col(col) = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));

    Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    const double sse = (y - X * beta).squaredNorm();
    const double ymean = y.mean();
    const double sst = (y.array() - ymean).square().sum();

    double v;
    if (sst == 0.0) {
      v = inf;  // constant factor: degenerate, flag it
    } else {
      double r2 = 1.0 - sse / sst;
      r2 = std::clamp(r2, 0.0, 1.0);
      v = (1.0 - r2 < kRankTol) ? inf : 1.0 / (1.0 - r2);
    }
    report.vif[cont[k]] = v;
    if (v > threshold) report.flagged.push_back(cont[k]);
  }
  return report;
}

void store_sample_table_csv(const SampleTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "x,y,label,year,block_id,watershed_id";
  for (const char* name : kFactorNames) out << ',' << name;
  out << '\n';
  char buf[64];
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d,%d,%d,%d", row.point.x, row.point.y,
                  row.point.label, row.point.year, row.block_id, row.watershed_id);
    out << buf;
    for (double f : row.features) {
      std::snprintf(buf, sizeof(buf), ",%.17g", f);
      out << buf;
    }
    out << '\n';
  }
}

SampleTable load_sample_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y,label,year,block_id,watershed_id", 0) != 0)
    throw ParseError("sample table csv '" + path.string() + "': bad header");
  SampleTable table;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    SampleRow row;
    try {
      std::getline(ls, tok, ',');
      row.point.x = std::stod(tok);
      std::getline(ls, tok, ',');
      row.point.y = std::stod(tok);
      std::getline(ls, tok, ',');
      row.point.label = std::stoi(tok);
      std::getline(ls, tok, ',');
      row.point.year = std::stoi(tok);
      std::getline(ls, tok, ',');
      row.block_id = std::stoi(tok);
      std::getline(ls, tok, ',');
      row.watershed_id = std::stoi(tok);
      for (int j = 0; j < kNumFactors; ++j) {
        if (!std::getline(ls, tok, ',')) throw std::invalid_argument("missing factor column");
        row.features[j] = std::stod(tok);
      }
    } catch (const std::exception&) {
      throw ParseError("sample table csv '" + path.string() + "' line " +
                       std::to_string(line_no) + ": cannot parse '" + line + "'");
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace floodgraph
