#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "floodgraph/baselines.hpp"
#include "floodgraph/basin_graph.hpp"
#include "floodgraph/sage.hpp"

namespace floodgraph {

struct BlockAssignment {
  int k = 0;
  std::vector<int> block_of_watershed;              // by watershed id
  std::vector<std::pair<double, double>> centroids;  // block centers (x, y)
};

/// Lloyd k-means with seeded farthest-first initialization, deterministic
/// tie-breaks (lowest index), empty clusters repaired by splitting the
/// largest cluster. Converges on an assignment fixpoint or 300 iterations.
/// `wcss_trace`, when given, records the within-cluster sum of squares
/// after every assignment step.
BlockAssignment kmeans_blocks(const std::vector<std::pair<double, double>>& centroids, int k,
                              std::uint64_t seed, std::vector<double>* wcss_trace = nullptr);

/// Watershed centroids (mean cell center) from a partition, by id.
std::vector<std::pair<double, double>> watershed_centroids(const WatershedPartition& partition);

/// Copy of the table with each row's block_id set to the block of the
/// nearest watershed centroid (ties to the lowest watershed id); the
/// nearest watershed id is recorded too.
SampleTable assign_blocks(const SampleTable& table, const WatershedPartition& partition,
                          const BlockAssignment& blocks);

struct MetricReport {
  double auc = 0.0;
  double f1_macro = 0.0;
  double kappa = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double brier = 0.0;
  double threshold = 0.5;
  int n_pos = 0;
  int n_neg = 0;
  bool auc_defined = false;  // false when labels are single-class
};

/// AUC from the Mann-Whitney rank statistic with 0.5 tie credit; macro-F1;
/// Cohen's kappa; TPR/FPR; Brier score. Threshold metrics use p >= threshold.
MetricReport compute_metrics(const std::vector<double>& probs, const std::vector<int>& labels,
                             double threshold = 0.5);

struct FoldReport {
  int fold = 0;
  bool skipped = false;
  std::string note;
  MetricReport metrics;
  int n_train = 0;
  int n_test = 0;
};

struct CvSummary {
  std::string model;
  std::vector<FoldReport> folds;
  double mean_auc = 0.0;
  double sd_auc = 0.0;  // sample sd over non-skipped folds
  int folds_used = 0;
};

/// Leave-one-block-out CV for a pixel baseline: per fold, train on all
/// rows outside the held-out block and score the block's rows. Folds whose
/// train or test side is single-class are skipped with a note; all folds
/// degenerate is an error.
CvSummary lobo_cv(const SampleTable& table, const BlockAssignment& blocks, BaselineKind kind,
                  const TrainConfig& config);

/// Leave-one-block-out CV for the graph model: nodes are assigned to
/// blocks through their watershed id; training masks the loss to the
/// remaining blocks and the held-out block's nodes are scored.
CvSummary lobo_cv_sage(const BasinGraph& graph, const BlockAssignment& blocks,
                       const TrainConfig& config);

/// Per-fold metrics CSV:
/// fold,model,auc,f1_macro,kappa,tpr,fpr,brier,n_train,n_test
void store_cv_csv(const std::vector<CvSummary>& summaries, const std::filesystem::path& path);

}  // namespace floodgraph
