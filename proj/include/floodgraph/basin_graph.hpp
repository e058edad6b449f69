#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "floodgraph/factors.hpp"
#include "floodgraph/terrain.hpp"

namespace floodgraph {

enum class EdgeDirection { downstream, reverse };

struct BasinEdge {
  int src = 0;
  int dst = 0;
  double weight = 1.0;  // in (0, 1]: upstream catchment area ratio
  EdgeDirection direction = EdgeDirection::downstream;
};

/// Directed sub-watershed connectivity graph. Node ids are the partition's
/// watershed ids (dense, 0-based). Downstream edges follow drainage; every
/// downstream edge has a reverse twin with the same weight so messages can
/// travel upstream. Edges are ordered downstream-first, each group sorted
/// by (src, dst).
struct BasinGraph {
  std::vector<int> node_ids;
  std::vector<FeatureVector> features;  // per-node area-weighted factor means
  std::vector<int> labels;              // 1 iff any flood point falls inside
  std::vector<double> areas_km2;
  std::vector<std::pair<double, double>> centroids;  // mean cell center (x, y)
  std::vector<BasinEdge> edges;

  int num_nodes() const { return static_cast<int>(node_ids.size()); }

  /// In-neighbor lists (neighbor node, edge weight) including both edge
  /// directions; this is the GraphSAGE neighborhood.
  std::vector<std::vector<std::pair<int, double>>> in_neighbors() const;
};

/// Assemble the graph: per-node factor means over the watershed's valid
/// cells (aspect averaged on the unit circle), any-point flood labels,
/// downstream edges weighted by the ratio of cumulative upstream catchment
/// areas, and reverse twins. Throws when a watershed has no valid cell for
/// some factor, naming both.
BasinGraph build_graph(const WatershedPartition& partition, const FactorStack& stack,
                       const FlowModel& flow, const std::vector<SamplePoint>& floods);

/// Watershed id of the label cell containing each point; -1 when the point
/// is out of the domain.
std::vector<int> point_watershed_lookup(const WatershedPartition& partition,
                                        const std::vector<SamplePoint>& points);

// Graph interchange: nodes `id,x,y,area_km2,label,<12 features>`;
// edges `src,dst,weight,direction`.
void store_graph_csv(const BasinGraph& graph, const std::filesystem::path& nodes_path,
                     const std::filesystem::path& edges_path);
BasinGraph load_graph_csv(const std::filesystem::path& nodes_path,
                          const std::filesystem::path& edges_path);

}  // namespace floodgraph
