#include "floodgraph/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "floodgraph/rng.hpp"
#include "floodgraph/util.hpp"

namespace floodgraph {

BlockAssignment kmeans_blocks(const std::vector<std::pair<double, double>>& centroids, int k,
                              std::uint64_t seed, std::vector<double>* wcss_trace) {
  const std::size_t n = centroids.size();
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("kmeans_blocks: k must be in [1, number of points]");

  auto dist2 = [&](const std::pair<double, double>& a, const std::pair<double, double>& b) {
    const double dx = a.first - b.first, dy = a.second - b.second;
    return dx * dx + dy * dy;
  };

  // farthest-first initialization from a seeded start
  std::vector<std::pair<double, double>> centers;
  centers.reserve(static_cast<std::size_t>(k));
  Rng rng(seed);
  centers.push_back(centroids[rng.next_below(n)]);
  std::vector<double> mind(n, 0.0);
  while (centers.size() < static_cast<std::size_t>(k)) {
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) d = std::min(d, dist2(centroids[i], c));
      mind[i] = d;
      if (d > best) {
        best = d;
        far = i;
      }
    }
    centers.push_back(centroids[far]);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best_b = 0;
      double best_d = dist2(centroids[i], centers[0]);
      for (int b = 1; b < k; ++b) {
        const double d = dist2(centroids[i], centers[static_cast<std::size_t>(b)]);
        if (d < best_d) {  // strict: ties keep the lowest block index
          best_d = d;
          best_b = b;
        }
      }
      if (assign[i] != best_b) {
        assign[i] = best_b;
        changed = true;
      }
    }
    if (wcss_trace) {
      double wcss = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        wcss += dist2(centroids[i], centers[static_cast<std::size_t>(assign[i])]);
      wcss_trace->push_back(wcss);
    }

    // empty-cluster repair: move the farthest member of the largest cluster
    for (int b = 0; b < k; ++b) {
      if (std::count(assign.begin(), assign.end(), b) > 0) continue;
      int largest = 0;
      long best_count = -1;
      for (int b2 = 0; b2 < k; ++b2) {
        const long cnt = std::count(assign.begin(), assign.end(), b2);
        if (cnt > best_count) {
          best_count = cnt;
          largest = b2;
        }
      }
      std::size_t far = 0;
      double best_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != largest) continue;
        const double d = dist2(centroids[i], centers[static_cast<std::size_t>(largest)]);
        if (d > best_d) {
          best_d = d;
          far = i;
        }
      }
      assign[far] = b;
      changed = true;
    }

    for (int b = 0; b < k; ++b) {
      double sx = 0.0, sy = 0.0;
      long cnt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != b) continue;
        sx += centroids[i].first;
        sy += centroids[i].second;
        ++cnt;
      }
      if (cnt > 0)
        centers[static_cast<std::size_t>(b)] = {sx / static_cast<double>(cnt),
                                                sy / static_cast<double>(cnt)};
    }
    if (!changed) break;
  }

  BlockAssignment out;
  out.k = k;
  out.block_of_watershed = std::move(assign);
  out.centroids = std::move(centers);
  return out;
}

std::vector<std::pair<double, double>> watershed_centroids(const WatershedPartition& partition) {
  const Grid& labels = partition.labels;
  std::vector<std::pair<double, double>> cent(static_cast<std::size_t>(partition.count),
                                              {0.0, 0.0});
  std::vector<long> counts(static_cast<std::size_t>(partition.count), 0);
  for (int r = 0; r < labels.nrows; ++r)
    for (int c = 0; c < labels.ncols; ++c) {
      if (!labels.valid_at(r, c)) continue;
      const auto w = static_cast<std::size_t>(labels.at(r, c));
      cent[w].first += labels.x_of_col(c);
      cent[w].second += labels.y_of_row(r);
      ++counts[w];
    }
  for (std::size_t w = 0; w < cent.size(); ++w)
    if (counts[w] > 0) {
      cent[w].first /= static_cast<double>(counts[w]);
      cent[w].second /= static_cast<double>(counts[w]);
    }
  return cent;
}

SampleTable assign_blocks(const SampleTable& table, const WatershedPartition& partition,
                          const BlockAssignment& blocks) {
  if (blocks.block_of_watershed.size() != static_cast<std::size_t>(partition.count))
    throw std::invalid_argument("assign_blocks: blocks do not cover the partition");
  const auto cent = watershed_centroids(partition);
  SampleTable out = table;
  for (auto& row : out.rows) {
    int best_w = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < cent.size(); ++w) {
      const double dx = row.point.x - cent[w].first;
      const double dy = row.point.y - cent[w].second;
      const double d = dx * dx + dy * dy;
      if (d < best_d) {  // ties keep the lowest watershed id
        best_d = d;
        best_w = static_cast<int>(w);
      }
    }
    row.watershed_id = best_w;
    row.block_id = blocks.block_of_watershed[static_cast<std::size_t>(best_w)];
  }
  return out;
}

MetricReport compute_metrics(const std::vector<double>& probs, const std::vector<int>& labels,
                             double threshold) {
  if (probs.size() != labels.size())
    throw std::invalid_argument("compute_metrics: probs/labels length mismatch");
  const std::size_t n = probs.size();
  if (n == 0) throw std::invalid_argument("compute_metrics: empty input");

  MetricReport rep;
  rep.threshold = threshold;
  for (int v : labels) (v ? rep.n_pos : rep.n_neg) += 1;

  // AUC from average ranks (equals the pairwise statistic with 0.5 per tie)
  if (rep.n_pos > 0 && rep.n_neg > 0) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && probs[order[j + 1]] == probs[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
      i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      if (labels[t] == 1) rank_sum_pos += rank[t];
    const double np = rep.n_pos, nn = rep.n_neg;
    rep.auc = (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
    rep.auc_defined = true;
  } else {
    rep.auc = std::numeric_limits<double>::quiet_NaN();
  }

  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const bool pred = probs[t] >= threshold;
    if (labels[t] == 1)
      (pred ? tp : fn) += 1;
    else
      (pred ? fp : tn) += 1;
  }
  auto f1_of = [](double tp_, double fp_, double fn_) {
    const double denom = 2.0 * tp_ + fp_ + fn_;
    return denom > 0.0 ? 2.0 * tp_ / denom : 0.0;
  };
  rep.f1_macro = 0.5 * (f1_of(tp, fp, fn) + f1_of(tn, fn, fp));
  rep.tpr = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
  rep.fpr = (fp + tn) > 0 ? fp / (fp + tn) : 0.0;

  const double nd = static_cast<double>(n);
  const double po = (tp + tn) / nd;
  const double pe = ((tp + fn) * (tp + fp) + (tn + fp) * (tn + fn)) / (nd * nd);
  rep.kappa = (1.0 - pe) > 0.0 ? (po - pe) / (1.0 - pe) : 0.0;

  double brier = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double d = probs[t] - labels[t];
    brier += d * d;
  }
  rep.brier = brier / nd;
  return rep;
}

namespace {

void finish_summary(CvSummary& s) {
  std::vector<double> aucs;
  for (const auto& f : s.folds)
    if (!f.skipped && f.metrics.auc_defined) aucs.push_back(f.metrics.auc);
  s.folds_used = static_cast<int>(aucs.size());
  if (aucs.empty())
    throw std::runtime_error("lobo_cv: every fold was degenerate (" + s.model + ")");
  s.mean_auc = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
  double ss = 0.0;
  for (double a : aucs) ss += (a - s.mean_auc) * (a - s.mean_auc);
  s.sd_auc = aucs.size() > 1 ? std::sqrt(ss / static_cast<double>(aucs.size() - 1)) : 0.0;
}

bool both_classes(const std::vector<int>& y) {
  bool h0 = false, h1 = false;
  for (int v : y) (v ? h1 : h0) = true;
  return h0 && h1;
}

}  // namespace

CvSummary lobo_cv(const SampleTable& table, const BlockAssignment& blocks, BaselineKind kind,
                  const TrainConfig& config) {
  for (const auto& row : table.rows)
    if (row.block_id < 0 || row.block_id >= blocks.k)
      throw std::invalid_argument("lobo_cv: table has unassigned block ids");

  CvSummary summary;
  summary.model = baseline_kind_name(kind);
  summary.folds.assign(static_cast<std::size_t>(blocks.k), FoldReport{});

  parallel_for(static_cast<std::size_t>(blocks.k), [&](std::size_t b) {
    FoldReport& fr = summary.folds[b];
    fr.fold = static_cast<int>(b);
    SampleTable train;
    std::vector<const SampleRow*> test;
    for (const auto& row : table.rows) {
      if (row.block_id == static_cast<int>(b))
        test.push_back(&row);
      else
        train.rows.push_back(row);
    }
    fr.n_train = static_cast<int>(train.rows.size());
    fr.n_test = static_cast<int>(test.size());

    std::vector<int> ytr, yte;
    for (const auto& row : train.rows) ytr.push_back(row.point.label);
    for (const auto* row : test) yte.push_back(row->point.label);
    if (test.empty() || !both_classes(ytr) || !both_classes(yte)) {
      fr.skipped = true;
      fr.note = "degenerate fold: single-class side";
      return;
    }

    TrainConfig fold_cfg = config;
    fold_cfg.seed = mix_seed(config.seed, 0xCF01D + b);
    const BaselineModel model = fit_baseline(kind, train, fold_cfg);
    std::vector<double> probs;
    probs.reserve(test.size());
    for (const auto* row : test) probs.push_back(predict_baseline(model, row->features));
    fr.metrics = compute_metrics(probs, yte);
  });

  finish_summary(summary);
  return summary;
}

CvSummary lobo_cv_sage(const BasinGraph& graph, const BlockAssignment& blocks,
                       const TrainConfig& config) {
  const std::size_t n = static_cast<std::size_t>(graph.num_nodes());
  if (blocks.block_of_watershed.size() != n)
    throw std::invalid_argument("lobo_cv_sage: blocks do not cover the graph");

  CvSummary summary;
  summary.model = "gnn";
  summary.folds.assign(static_cast<std::size_t>(blocks.k), FoldReport{});

  parallel_for(static_cast<std::size_t>(blocks.k), [&](std::size_t b) {
    FoldReport& fr = summary.folds[b];
    fr.fold = static_cast<int>(b);
    std::vector<char> train_mask(n, 0);
    std::vector<std::size_t> test_nodes;
    for (std::size_t v = 0; v < n; ++v) {
      if (blocks.block_of_watershed[v] == static_cast<int>(b))
        test_nodes.push_back(v);
      else
        train_mask[v] = 1;
    }
    fr.n_train = static_cast<int>(n - test_nodes.size());
    fr.n_test = static_cast<int>(test_nodes.size());

    std::vector<int> ytr, yte;
    for (std::size_t v = 0; v < n; ++v)
      if (train_mask[v]) ytr.push_back(graph.labels[v]);
    for (std::size_t v : test_nodes) yte.push_back(graph.labels[v]);
    if (test_nodes.empty() || !both_classes(ytr) || !both_classes(yte)) {
      fr.skipped = true;
      fr.note = "degenerate fold: single-class side";
      return;
    }

    TrainConfig fold_cfg = config;
    fold_cfg.seed = mix_seed(config.seed, 0x5AFE + b);
    const SageFitResult fit = fit_sage(graph, fold_cfg, train_mask);
    const auto probs_all = sage_node_probs(fit.model, graph);
    std::vector<double> probs;
    probs.reserve(test_nodes.size());
    for (std::size_t v : test_nodes) probs.push_back(probs_all[v]);
    fr.metrics = compute_metrics(probs, yte);
  });

  finish_summary(summary);
  return summary;
}

void store_cv_csv(const std::vector<CvSummary>& summaries, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "fold,model,auc,f1_macro,kappa,tpr,fpr,brier,n_train,n_test\n";
  char buf[256];
  for (const auto& s : summaries) {
    for (const auto& f : s.folds) {
      if (f.skipped) {
        std::snprintf(buf, sizeof(buf), "%d,%s,skipped,,,,,,%d,%d\n", f.fold, s.model.c_str(),
                      f.n_train, f.n_test);
      } else {
        std::snprintf(buf, sizeof(buf), "%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d\n", f.fold,
                      s.model.c_str(), f.metrics.auc, f.metrics.f1_macro, f.metrics.kappa,
                      f.metrics.tpr, f.metrics.fpr, f.metrics.brier, f.n_train, f.n_test);
      }
      out << buf;
    }
  }
}

}  // namespace floodgraph
