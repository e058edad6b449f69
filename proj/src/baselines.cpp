#include "floodgraph/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "floodgraph/rng.hpp"
#include "floodgraph/util.hpp"

namespace floodgraph {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require_both_classes(const std::vector<int>& y, const char* who) {
  bool has0 = false, has1 = false;
  for (int v : y) (v ? has1 : has0) = true;
  if (!has0 || !has1)
    throw std::runtime_error(std::string(who) + ": training data must contain both classes");
}

std::vector<FeatureVector> table_features(const SampleTable& table) {
  std::vector<FeatureVector> X;
  X.reserve(table.rows.size());
  for (const auto& row : table.rows) X.push_back(row.features);
  return X;
}

std::vector<int> table_labels(const SampleTable& table) {
  std::vector<int> y;
  y.reserve(table.rows.size());
  for (const auto& row : table.rows) y.push_back(row.point.label);
  return y;
}

}  // namespace

const char* baseline_kind_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::logistic: return "logistic";
    case BaselineKind::forest: return "forest";
    case BaselineKind::gbt: return "gbt";
    case BaselineKind::stacking: return "stacking";
  }
  return "?";
}

BaselineKind baseline_kind_from_name(const std::string& name) {
  if (name == "logistic") return BaselineKind::logistic;
  if (name == "forest") return BaselineKind::forest;
  if (name == "gbt") return BaselineKind::gbt;
  if (name == "stacking") return BaselineKind::stacking;
  throw std::invalid_argument("unknown baseline kind '" + name + "'");
}

std::array<double, 2> balanced_class_weights(const std::vector<int>& y) {
  double n0 = 0, n1 = 0;
  for (int v : y) (v ? n1 : n0) += 1.0;
  const double n = n0 + n1;
  return {n / (2.0 * n0), n / (2.0 * n1)};
}

// --- logistic ----------------------------------------------------------------

double LogisticModel::predict(std::span<const double> x) const {
  if (x.size() != weights.size())
    throw std::invalid_argument("logistic predict: expected " + std::to_string(weights.size()) +
                                " features, got " + std::to_string(x.size()));
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j)
    z += weights[j] * (x[j] - feat_mean[j]) / feat_scale[j];
  return sigmoid(z);
}

LogisticModel fit_logistic(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                           const std::vector<double>& row_weights) {
  const std::size_t n = X.size();
  if (n == 0 || y.size() != n) throw std::invalid_argument("fit_logistic: bad inputs");
  require_both_classes(y, "fit_logistic");
  const std::size_t d = X[0].size();

  LogisticModel model;
  model.feat_mean.assign(d, 0.0);
  model.feat_scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (const auto& row : X) m += row[j];
    m /= static_cast<double>(n);
    double v = 0.0;
    for (const auto& row : X) v += (row[j] - m) * (row[j] - m);
    v /= static_cast<double>(n);
    model.feat_mean[j] = m;
    if (v > 0.0) model.feat_scale[j] = std::sqrt(v);
  }

  Eigen::MatrixXd Z(n, d + 1);  // standardized features + intercept column
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (X[i][j] - model.feat_mean[j]) / model.feat_scale[j];
    Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = 1.0;
  }

  // Newton iterations; tiny ridge keeps the Hessian invertible on
  // separable data (intercept excluded from the penalty).
  constexpr double kRidge = 1e-6;
  constexpr int kMaxIter = 60;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
  Eigen::VectorXd w(n), resid(n);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    Eigen::VectorXd eta = Z * beta;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(eta(static_cast<Eigen::Index>(i)));
      const double rw = row_weights[i];
      resid(static_cast<Eigen::Index>(i)) = rw * (y[i] - p);
      w(static_cast<Eigen::Index>(i)) = std::max(rw * p * (1.0 - p), 1e-12);
    }
    Eigen::VectorXd grad = Z.transpose() * resid;
    for (std::size_t j = 0; j < d; ++j)
      grad(static_cast<Eigen::Index>(j)) -= kRidge * beta(static_cast<Eigen::Index>(j));
    Eigen::MatrixXd H = Z.transpose() * w.asDiagonal() * Z;
    for (std::size_t j = 0; j < d; ++j)
      H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += kRidge;
    Eigen::VectorXd step = H.ldlt().solve(grad);
    beta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }

  model.weights.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) model.weights[j] = beta(static_cast<Eigen::Index>(j));
  model.bias = beta(static_cast<Eigen::Index>(d));
  return model;
}

// --- trees -------------------------------------------------------------------

double Tree::eval(const FeatureVector& x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& t = nodes[static_cast<std::size_t>(node)];
    node = (x[static_cast<std::size_t>(t.feature)] <= t.threshold) ? t.left : t.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

double ForestModel::predict(const FeatureVector& x) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.eval(x);
  return s / static_cast<double>(trees.size());
}

double GbtModel::predict(const FeatureVector& x) const {
  double score = base_score;
  for (const auto& t : trees) score += shrinkage * t.eval(x);
  return sigmoid(score);
}

namespace {

// Recursive Gini CART node builder over an index subset.
struct ForestBuilder {
  const std::vector<FeatureVector>& X;
  const std::vector<int>& y;
  std::array<double, 2> class_w;
  int max_depth;
  int mtry;
  Rng& rng;
  Tree& tree;

  int build(std::vector<std::size_t>& idx, int lo, int hi, int depth) {
    double w0 = 0.0, w1 = 0.0;
    for (int i = lo; i < hi; ++i) (y[idx[static_cast<std::size_t>(i)]] ? w1 : w0) +=
        class_w[static_cast<std::size_t>(y[idx[static_cast<std::size_t>(i)]])];
    const double total = w0 + w1;
    const double p1 = w1 / total;

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, p1});
    if (depth >= max_depth || w0 == 0.0 || w1 == 0.0 || hi - lo < 2) return node_id;

    const double parent_gini = 1.0 - (w0 / total) * (w0 / total) - (w1 / total) * (w1 / total);

    // mtry distinct candidate features
    auto feats = rng.sample_without_replacement(kNumFactors, static_cast<std::size_t>(mtry));

    double best_gain = 1e-12;
    int best_feat = -1;
    double best_thresh = 0.0;
    std::vector<std::pair<double, int>> vals;
    for (std::size_t f : feats) {
      vals.clear();
      for (int i = lo; i < hi; ++i) {
        const std::size_t row = idx[static_cast<std::size_t>(i)];
        vals.push_back({X[row][f], y[row]});
      }
      std::sort(vals.begin(), vals.end());
      double lw0 = 0.0, lw1 = 0.0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        (vals[i].second ? lw1 : lw0) += class_w[static_cast<std::size_t>(vals[i].second)];
        if (vals[i].first == vals[i + 1].first) continue;
        const double rw0 = w0 - lw0, rw1 = w1 - lw1;
        const double lt = lw0 + lw1, rt = rw0 + rw1;
        const double gini_l = 1.0 - (lw0 / lt) * (lw0 / lt) - (lw1 / lt) * (lw1 / lt);
        const double gini_r = 1.0 - (rw0 / rt) * (rw0 / rt) - (rw1 / rt) * (rw1 / rt);
        const double gain = parent_gini - (lt / total) * gini_l - (rt / total) * gini_r;
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = static_cast<int>(f);
          best_thresh = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }
    if (best_feat < 0) return node_id;

    const auto mid_it = std::stable_partition(
        idx.begin() + lo, idx.begin() + hi, [&](std::size_t row) {
          return X[row][static_cast<std::size_t>(best_feat)] <= best_thresh;
        });
    const int mid = static_cast<int>(mid_it - idx.begin());
    if (mid == lo || mid == hi) return node_id;  // degenerate split

    tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feat;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_thresh;
    const int left = build(idx, lo, mid, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    const int right = build(idx, mid, hi, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }
};

}  // namespace

ForestModel fit_forest(const std::vector<FeatureVector>& X, const std::vector<int>& y,
                       const TrainConfig& config) {
  require_both_classes(y, "fit_forest");
  const std::size_t n = X.size();
  const auto class_w = balanced_class_weights(y);
  const int mtry = static_cast<int>(std::floor(std::sqrt(static_cast<double>(kNumFactors))));

  ForestModel model;
  model.trees.assign(static_cast<std::size_t>(config.forest_trees), Tree{});
  parallel_for(static_cast<std::size_t>(config.forest_trees), [&](std::size_t t) {
    Rng rng(mix_seed(config.seed, t));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = rng.next_below(n);  // bootstrap
    ForestBuilder builder{X, y, class_w, config.forest_max_depth, mtry, rng, model.trees[t]};
    builder.build(idx, 0, static_cast<int>(n), 0);
  });
  return model;
}

namespace {

// Histogram-based regression tree on gradient/hessian pairs, the usual
// boosted-tree construction.
struct GbtBuilder {
  static constexpr int kBins = 64;
  static constexpr double kLambda = 1.0;      // leaf L2 regularization
  static constexpr double kMinChildHess = 1e-3;

  const std::vector<FeatureVector>& X;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  const std::vector<std::array<std::uint8_t, kNumFactors>>& bins;
  const std::array<std::vector<double>, kNumFactors>& edges;
  int max_depth;
  Tree& tree;

  int build(std::vector<std::size_t>& idx, int lo, int hi, int depth) {
    double G = 0.0, H = 0.0;
    for (int i = lo; i < hi; ++i) {
      G += grad[idx[static_cast<std::size_t>(i)]];
      H += hess[idx[static_cast<std::size_t>(i)]];
    }
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, -G / (H + kLambda)});
    if (depth >= max_depth || hi - lo < 2) return node_id;

    const double parent_obj = G * G / (H + kLambda);
    double best_gain = 1e-12;
    int best_feat = -1, best_bin = -1;

    for (int f = 0; f < kNumFactors; ++f) {
      double hg[kBins] = {0.0}, hh[kBins] = {0.0};
      for (int i = lo; i < hi; ++i) {
        const std::size_t row = idx[static_cast<std::size_t>(i)];
        const int b = bins[row][static_cast<std::size_t>(f)];
        hg[b] += grad[row];
        hh[b] += hess[row];
      }
      double gl = 0.0, hl = 0.0;
      for (int b = 0; b + 1 < kBins; ++b) {
        gl += hg[b];
        hl += hh[b];
        const double gr = G - gl, hr = H - hl;
        if (hl < kMinChildHess || hr < kMinChildHess) continue;
        const double gain = gl * gl / (hl + kLambda) + gr * gr / (hr + kLambda) - parent_obj;
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = f;
          best_bin = b;
        }
      }
    }
    if (best_feat < 0) return node_id;

    const double thresh = edges[static_cast<std::size_t>(best_feat)][static_cast<std::size_t>(best_bin)];
    const auto mid_it =
        std::stable_partition(idx.begin() + lo, idx.begin() + hi, [&](std::size_t row) {
          return bins[row][static_cast<std::size_t>(best_feat)] <= best_bin;
        });
    const int mid = static_cast<int>(mid_it - idx.begin());
    if (mid == lo || mid == hi) return node_id;

    tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feat;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = thresh;
    const int left = build(idx, lo, mid, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    const int right = build(idx, mid, hi, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }
};

}  // namespace

GbtModel fit_gbt(const std::vector<FeatureVector>& X, const std::vector<int>& y,
                 const TrainConfig& config) {
  require_both_classes(y, "fit_gbt");
  const std::size_t n = X.size();

  // Quantile bin edges per feature; a row's bin is the first edge holding
  // its value (last bin catches the rest), so thresholds are data values.
  std::array<std::vector<double>, kNumFactors> edges;
  std::vector<std::array<std::uint8_t, kNumFactors>> bins(n);
  for (int f = 0; f < kNumFactors; ++f) {
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = X[i][static_cast<std::size_t>(f)];
    std::sort(sorted.begin(), sorted.end());
    auto& e = edges[static_cast<std::size_t>(f)];
    e.clear();
    for (int b = 1; b < GbtBuilder::kBins; ++b) {
      const std::size_t pos = n * static_cast<std::size_t>(b) / GbtBuilder::kBins;
      const double v = sorted[std::min(pos, n - 1)];
      if (e.empty() || v > e.back()) e.push_back(v);
    }
    while (e.size() < GbtBuilder::kBins) e.push_back(sorted.back());
    for (std::size_t i = 0; i < n; ++i) {
      const double v = X[i][static_cast<std::size_t>(f)];
      int b = static_cast<int>(std::lower_bound(e.begin(), e.end(), v) - e.begin());
      bins[i][static_cast<std::size_t>(f)] = static_cast<std::uint8_t>(std::min(b, GbtBuilder::kBins - 1));
    }
  }

  std::vector<double> row_w(n, 1.0);
  double wpos = 0.0, wneg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] == 1) row_w[i] = config.gbt_pos_weight;
    (y[i] ? wpos : wneg) += row_w[i];
  }

  GbtModel model;
  model.shrinkage = config.gbt_learning_rate;
  model.base_score = std::log(wpos / wneg);

  std::vector<double> score(n, model.base_score), grad(n), hess(n);
  std::vector<std::size_t> idx(n);
  for (int round = 0; round < config.gbt_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      grad[i] = row_w[i] * (p - y[i]);
      hess[i] = std::max(row_w[i] * p * (1.0 - p), 1e-16);
    }
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Tree tree;
    GbtBuilder builder{X, grad, hess, bins, edges, config.gbt_max_depth, tree};
    builder.build(idx, 0, static_cast<int>(n), 0);
    for (std::size_t i = 0; i < n; ++i) score[i] += model.shrinkage * tree.eval(X[i]);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// --- stacking ----------------------------------------------------------------

double StackingModel::predict(const FeatureVector& x) const {
  const std::array<double, 3> base = {logistic_base.predict(x), forest_base.predict(x),
                                      gbt_base.predict(x)};
  return meta.predict(std::span<const double>(base.data(), base.size()));
}

namespace {

StackingModel fit_stacking(const std::vector<FeatureVector>& X, const std::vector<int>& y,
                           const TrainConfig& config) {
  require_both_classes(y, "fit_stacking");
  const std::size_t n = X.size();
  constexpr int kFolds = 5;

  // Stratified fold assignment keeps both classes in every fold.
  std::vector<int> fold(n, 0);
  {
    Rng rng(mix_seed(config.seed, 0xF01D));
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (y[i] == cls) members.push_back(i);
      rng.shuffle(members);
      for (std::size_t i = 0; i < members.size(); ++i)
        fold[members[i]] = static_cast<int>(i % kFolds);
    }
  }

  std::vector<std::vector<double>> oof(n, std::vector<double>(3, 0.0));
  for (int f = 0; f < kFolds; ++f) {
    std::vector<FeatureVector> Xt;
    std::vector<int> yt;
    std::vector<std::size_t> holdout;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold[i] == f)
        holdout.push_back(i);
      else {
        Xt.push_back(X[i]);
        yt.push_back(y[i]);
      }
    }
    if (holdout.empty()) continue;

    TrainConfig sub = config;
    sub.seed = mix_seed(config.seed, 100 + static_cast<std::uint64_t>(f));
    const auto cw = balanced_class_weights(yt);
    std::vector<std::vector<double>> Xt_vec(Xt.size());
    std::vector<double> wt(Xt.size());
    for (std::size_t i = 0; i < Xt.size(); ++i) {
      Xt_vec[i].assign(Xt[i].begin(), Xt[i].end());
      wt[i] = cw[static_cast<std::size_t>(yt[i])];
    }
    const LogisticModel lb = fit_logistic(Xt_vec, yt, wt);
    const ForestModel fb = fit_forest(Xt, yt, sub);
    const GbtModel gb = fit_gbt(Xt, yt, sub);
    for (std::size_t i : holdout) {
      oof[i][0] = lb.predict(X[i]);
      oof[i][1] = fb.predict(X[i]);
      oof[i][2] = gb.predict(X[i]);
    }
  }

  StackingModel model;
  {
    const auto cw = balanced_class_weights(y);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = cw[static_cast<std::size_t>(y[i])];
    model.meta = fit_logistic(oof, y, w);
  }
  // Refit the bases on the full table for prediction time.
  {
    std::vector<std::vector<double>> Xv(n);
    std::vector<double> w(n);
    const auto cw = balanced_class_weights(y);
    for (std::size_t i = 0; i < n; ++i) {
      Xv[i].assign(X[i].begin(), X[i].end());
      w[i] = cw[static_cast<std::size_t>(y[i])];
    }
    model.logistic_base = fit_logistic(Xv, y, w);
  }
  model.forest_base = fit_forest(X, y, config);
  model.gbt_base = fit_gbt(X, y, config);
  return model;
}

}  // namespace

BaselineModel fit_baseline(BaselineKind kind, const SampleTable& table,
                           const TrainConfig& config) {
  const auto X = table_features(table);
  const auto y = table_labels(table);
  require_both_classes(y, "fit_baseline");

  BaselineModel model;
  model.kind = kind;
  switch (kind) {
    case BaselineKind::logistic: {
      const auto cw = balanced_class_weights(y);
      std::vector<std::vector<double>> Xv(X.size());
      std::vector<double> w(X.size());
      for (std::size_t i = 0; i < X.size(); ++i) {
        Xv[i].assign(X[i].begin(), X[i].end());
        w[i] = cw[static_cast<std::size_t>(y[i])];
      }
      model.impl = fit_logistic(Xv, y, w);
      break;
    }
    case BaselineKind::forest:
      model.impl = fit_forest(X, y, config);
      break;
    case BaselineKind::gbt:
      model.impl = fit_gbt(X, y, config);
      break;
    case BaselineKind::stacking:
      model.impl = fit_stacking(X, y, config);
      break;
  }
  return model;
}

double predict_baseline(const BaselineModel& model, const FeatureVector& features) {
  return std::visit([&](const auto& m) { return m.predict(features); }, model.impl);
}

// --- JSON serialization -------------------------------------------------------

namespace {

using nlohmann::json;

json tree_to_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  return nodes;
}

Tree tree_from_json(const json& j) {
  Tree t;
  for (const auto& n : j)
    t.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(),
                       n[4].get<double>()});
  return t;
}

json logistic_to_json(const LogisticModel& m) {
  return {{"weights", m.weights},
          {"bias", m.bias},
          {"feat_mean", m.feat_mean},
          {"feat_scale", m.feat_scale}};
}

LogisticModel logistic_from_json(const json& j) {
  LogisticModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.feat_mean = j.at("feat_mean").get<std::vector<double>>();
  m.feat_scale = j.at("feat_scale").get<std::vector<double>>();
  return m;
}

json forest_to_json(const ForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
  return {{"trees", trees}};
}

ForestModel forest_from_json(const json& j) {
  ForestModel m;
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

json gbt_to_json(const GbtModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
  return {{"base_score", m.base_score}, {"shrinkage", m.shrinkage}, {"trees", trees}};
}

GbtModel gbt_from_json(const json& j) {
  GbtModel m;
  m.base_score = j.at("base_score").get<double>();
  m.shrinkage = j.at("shrinkage").get<double>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

}  // namespace

void store_baseline_json(const BaselineModel& model, const TrainConfig& config,
                         const std::filesystem::path& path) {
  json j;
  j["kind"] = baseline_kind_name(model.kind);
  j["feature_names"] = kFactorNames;
  j["config"] = {{"seed", config.seed},
                 {"forest_trees", config.forest_trees},
                 {"forest_max_depth", config.forest_max_depth},
                 {"gbt_rounds", config.gbt_rounds},
                 {"gbt_learning_rate", config.gbt_learning_rate},
                 {"gbt_max_depth", config.gbt_max_depth},
                 {"gbt_pos_weight", config.gbt_pos_weight}};
  switch (model.kind) {
    case BaselineKind::logistic:
      j["model"] = logistic_to_json(std::get<LogisticModel>(model.impl));
      break;
    case BaselineKind::forest:
      j["model"] = forest_to_json(std::get<ForestModel>(model.impl));
      break;
    case BaselineKind::gbt:
      j["model"] = gbt_to_json(std::get<GbtModel>(model.impl));
      break;
    case BaselineKind::stacking: {
      const auto& s = std::get<StackingModel>(model.impl);
      j["model"] = {{"logistic_base", logistic_to_json(s.logistic_base)},
                    {"forest_base", forest_to_json(s.forest_base)},
                    {"gbt_base", gbt_to_json(s.gbt_base)},
                    {"meta", logistic_to_json(s.meta)}};
      break;
    }
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << '\n';
}

BaselineModel load_baseline_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  json j = json::parse(in);
  BaselineModel model;
  model.kind = baseline_kind_from_name(j.at("kind").get<std::string>());
  const json& m = j.at("model");
  switch (model.kind) {
    case BaselineKind::logistic: model.impl = logistic_from_json(m); break;
    case BaselineKind::forest: model.impl = forest_from_json(m); break;
    case BaselineKind::gbt: model.impl = gbt_from_json(m); break;
    case BaselineKind::stacking: {
      StackingModel s;
      s.logistic_base = logistic_from_json(m.at("logistic_base"));
      s.forest_base = forest_from_json(m.at("forest_base"));
      s.gbt_base = gbt_from_json(m.at("gbt_base"));
      s.meta = logistic_from_json(m.at("meta"));
      model.impl = s;
      break;
    }
  }
  return model;
}

}  // namespace floodgraph
