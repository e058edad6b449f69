#include "floodgraph/basin_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

namespace floodgraph {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::vector<std::vector<std::pair<int, double>>> BasinGraph::in_neighbors() const {
  std::vector<std::vector<std::pair<int, double>>> in(node_ids.size());
  for (const auto& e : edges) in[static_cast<std::size_t>(e.dst)].push_back({e.src, e.weight});
  return in;
}

BasinGraph build_graph(const WatershedPartition& partition, const FactorStack& stack,
                       const FlowModel& flow, const std::vector<SamplePoint>& floods) {
  stack.validate();
  require_same_georef(partition.labels, stack.grids[0], "build_graph");
  require_same_georef(partition.labels, flow.accumulation, "build_graph");
  const Grid& labels = partition.labels;
  const int n = partition.count;

  BasinGraph g;
  g.node_ids.resize(n);
  for (int i = 0; i < n; ++i) g.node_ids[i] = i;
  g.features.assign(n, FeatureVector{});
  g.labels.assign(n, 0);
  g.areas_km2 = partition.areas_km2;
  g.centroids.assign(n, {0.0, 0.0});

  // Per-watershed factor sums. Aspect is circular: accumulate sin/cos and
  // re-encode the mean angle afterwards.
  constexpr int kAspect = 2;
  std::vector<std::array<double, kNumFactors>> sums(n, std::array<double, kNumFactors>{});
  std::vector<std::array<long long, kNumFactors>> counts(
      n, std::array<long long, kNumFactors>{});
  std::vector<double> aspect_sin(n, 0.0), aspect_cos(n, 0.0);
  std::vector<long long> cell_count(n, 0);

  for (int r = 0; r < labels.nrows; ++r)
    for (int c = 0; c < labels.ncols; ++c) {
      if (!labels.valid_at(r, c)) continue;
      const int w = static_cast<int>(labels.at(r, c));
      ++cell_count[w];
      g.centroids[w].first += labels.x_of_col(c);
      g.centroids[w].second += labels.y_of_row(r);
      for (int j = 0; j < kNumFactors; ++j) {
        const double v = stack.grids[j].at(r, c);
        if (stack.grids[j].is_nodata(v)) continue;
        ++counts[w][j];
        if (j == kAspect) {
          aspect_sin[w] += std::sin(v * kPi / 180.0);
          aspect_cos[w] += std::cos(v * kPi / 180.0);
        } else {
          sums[w][j] += v;
        }
      }
    }

  for (int w = 0; w < n; ++w) {
    if (cell_count[w] > 0) {
      g.centroids[w].first /= static_cast<double>(cell_count[w]);
      g.centroids[w].second /= static_cast<double>(cell_count[w]);
    }
    for (int j = 0; j < kNumFactors; ++j) {
      if (counts[w][j] == 0)
        throw std::runtime_error("build_graph: watershed " + std::to_string(w) +
                                 " has no valid cells for factor " + kFactorNames[j]);
      if (j == kAspect) {
        double a = std::atan2(aspect_sin[w], aspect_cos[w]) * 180.0 / kPi;
        if (a < 0.0) a += 360.0;
        g.features[w][j] = a;
      } else {
        g.features[w][j] = sums[w][j] / static_cast<double>(counts[w][j]);
      }
    }
  }

  for (const auto& p : floods) {
    const int r = labels.row_of_y(p.y);
    const int c = labels.col_of_x(p.x);
    if (labels.in_bounds(r, c) && labels.valid_at(r, c))
      g.labels[static_cast<int>(labels.at(r, c))] = 1;
  }

  // Cumulative upstream catchment area per node: own area plus everything
  // draining through it (DP over the downstream forest, leaves first).
  std::vector<int> pending(n, 0);
  for (int w = 0; w < n; ++w)
    if (partition.downstream[w] >= 0) ++pending[partition.downstream[w]];
  std::vector<double> cum_area(partition.areas_km2);
  std::deque<int> order;
  for (int w = 0; w < n; ++w)
    if (pending[w] == 0) order.push_back(w);
  int processed = 0;
  while (!order.empty()) {
    const int w = order.front();
    order.pop_front();
    ++processed;
    const int d = partition.downstream[w];
    if (d >= 0) {
      cum_area[d] += cum_area[w];
      if (--pending[d] == 0) order.push_back(d);
    }
  }
  if (processed != n) throw std::logic_error("build_graph: downstream relation has a cycle");

  std::vector<BasinEdge> down;
  for (int w = 0; w < n; ++w) {
    const int d = partition.downstream[w];
    if (d < 0) continue;
    double weight = cum_area[w] / cum_area[d];
    weight = std::min(weight, 1.0);  // nesting makes this <= 1 up to rounding
    down.push_back({w, d, weight, EdgeDirection::downstream});
  }
  std::sort(down.begin(), down.end(), [](const BasinEdge& a, const BasinEdge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  g.edges = down;
  for (const auto& e : down)
    g.edges.push_back({e.dst, e.src, e.weight, EdgeDirection::reverse});
  return g;
}

std::vector<int> point_watershed_lookup(const WatershedPartition& partition,
                                        const std::vector<SamplePoint>& points) {
  const Grid& labels = partition.labels;
  std::vector<int> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const int r = labels.row_of_y(p.y);
    const int c = labels.col_of_x(p.x);
    if (labels.in_bounds(r, c) && labels.valid_at(r, c))
      out.push_back(static_cast<int>(labels.at(r, c)));
    else
      out.push_back(-1);
  }
  return out;
}

void store_graph_csv(const BasinGraph& graph, const std::filesystem::path& nodes_path,
                     const std::filesystem::path& edges_path) {
  std::ofstream nodes(nodes_path);
  if (!nodes) throw std::runtime_error("cannot open '" + nodes_path.string() + "' for writing");
  nodes << "id,x,y,area_km2,label";
  for (const char* name : kFactorNames) nodes << ',' << name;
  nodes << '\n';
  char buf[64];
  for (int w = 0; w < graph.num_nodes(); ++w) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%d", graph.node_ids[w],
                  graph.centroids[w].first, graph.centroids[w].second, graph.areas_km2[w],
                  graph.labels[w]);
    nodes << buf;
    for (double f : graph.features[w]) {
      std::snprintf(buf, sizeof(buf), ",%.17g", f);
      nodes << buf;
    }
    nodes << '\n';
  }

  std::ofstream edges(edges_path);
  if (!edges) throw std::runtime_error("cannot open '" + edges_path.string() + "' for writing");
  edges << "src,dst,weight,direction\n";
  for (const auto& e : graph.edges) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%s\n", e.src, e.dst, e.weight,
                  e.direction == EdgeDirection::downstream ? "downstream" : "reverse");
    edges << buf;
  }
}

BasinGraph load_graph_csv(const std::filesystem::path& nodes_path,
                          const std::filesystem::path& edges_path) {
  BasinGraph g;
  {
    std::ifstream in(nodes_path);
    if (!in) throw std::runtime_error("cannot open '" + nodes_path.string() + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line.rfind("id,x,y,area_km2,label", 0) != 0)
      throw ParseError("graph nodes csv: bad header");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string tok;
      std::getline(ls, tok, ',');
      g.node_ids.push_back(std::stoi(tok));
      std::pair<double, double> cent;
      std::getline(ls, tok, ',');
      cent.first = std::stod(tok);
      std::getline(ls, tok, ',');
      cent.second = std::stod(tok);
      g.centroids.push_back(cent);
      std::getline(ls, tok, ',');
      g.areas_km2.push_back(std::stod(tok));
      std::getline(ls, tok, ',');
      g.labels.push_back(std::stoi(tok));
      FeatureVector f{};
      for (int j = 0; j < kNumFactors; ++j) {
        if (!std::getline(ls, tok, ',')) throw ParseError("graph nodes csv: missing feature");
        f[j] = std::stod(tok);
      }
      g.features.push_back(f);
    }
  }
  {
    std::ifstream in(edges_path);
    if (!in) throw std::runtime_error("cannot open '" + edges_path.string() + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line.rfind("src,dst,weight,direction", 0) != 0)
      throw ParseError("graph edges csv: bad header");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string tok;
      BasinEdge e;
      std::getline(ls, tok, ',');
      e.src = std::stoi(tok);
      std::getline(ls, tok, ',');
      e.dst = std::stoi(tok);
      std::getline(ls, tok, ',');
      e.weight = std::stod(tok);
      std::getline(ls, tok, ',');
      if (tok == "downstream")
        e.direction = EdgeDirection::downstream;
      else if (tok == "reverse")
        e.direction = EdgeDirection::reverse;
      else
        throw ParseError("graph edges csv: bad direction '" + tok + "'");
      g.edges.push_back(e);
    }
  }
  return g;
}

}  // namespace floodgraph
