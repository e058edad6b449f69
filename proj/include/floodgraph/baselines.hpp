#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "floodgraph/factors.hpp"

namespace floodgraph {

enum class BaselineKind { logistic, forest, gbt, stacking };

const char* baseline_kind_name(BaselineKind kind);
BaselineKind baseline_kind_from_name(const std::string& name);

/// Shared training hyperparameters. Learning rate, weight decay, epochs
/// and the Adam constants drive the graph model; the tree settings drive
/// the forest and boosted-tree baselines.
struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  int epochs = 200;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  int forest_trees = 500;
  int forest_max_depth = 6;
  int gbt_rounds = 500;
  double gbt_learning_rate = 0.1;
  int gbt_max_depth = 6;
  double gbt_pos_weight = 5.0;  // positive-class weight in the boosted loss

  double dropout_p = 0.30;
  bool sage_weighted_mean = true;  // aggregate with normalized edge weights
};

/// Binary L2-regularized logistic regression, class-weight balanced,
/// fitted by Newton iterations on internally standardized features.
/// Feature count is free so the same model serves as the stacking
/// meta-learner over base probabilities.
struct LogisticModel {
  std::vector<double> weights;  // per standardized feature
  double bias = 0.0;
  std::vector<double> feat_mean;
  std::vector<double> feat_scale;
  double predict(std::span<const double> x) const;
  double predict(const FeatureVector& x) const {
    return predict(std::span<const double>(x.data(), x.size()));
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf payload: class-1 proportion (forest) or score (gbt)
};

struct Tree {
  std::vector<TreeNode> nodes;
  double eval(const FeatureVector& x) const;
};

/// Bagged CART forest, Gini impurity, sqrt(d) features per split,
/// balanced class weights; prediction is the mean of per-tree class-1
/// leaf proportions.
struct ForestModel {
  std::vector<Tree> trees;
  double predict(const FeatureVector& x) const;
};

/// Logistic-loss gradient boosting over depth-bounded regression trees
/// with histogram split finding; prediction is the sigmoid of the
/// additive score.
struct GbtModel {
  double base_score = 0.0;
  double shrinkage = 0.1;
  std::vector<Tree> trees;
  double predict(const FeatureVector& x) const;
};

/// Stacking: logistic + forest + gbt base models generating 5-fold
/// out-of-fold probabilities for a logistic meta-learner.
struct StackingModel {
  LogisticModel logistic_base;
  ForestModel forest_base;
  GbtModel gbt_base;
  LogisticModel meta;  // over the 3 base probabilities
  double predict(const FeatureVector& x) const;
};

struct BaselineModel {
  BaselineKind kind = BaselineKind::logistic;
  std::variant<LogisticModel, ForestModel, GbtModel, StackingModel> impl;
};

/// Deterministic fit of the requested kind. Throws when the table does not
/// contain both classes.
BaselineModel fit_baseline(BaselineKind kind, const SampleTable& table,
                           const TrainConfig& config);

/// Probability of the flood class, in [0, 1].
double predict_baseline(const BaselineModel& model, const FeatureVector& features);

// Self-describing JSON serialization.
void store_baseline_json(const BaselineModel& model, const TrainConfig& config,
                         const std::filesystem::path& path);
BaselineModel load_baseline_json(const std::filesystem::path& path);

// Building blocks shared with tests and the stacking trainer.
LogisticModel fit_logistic(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                           const std::vector<double>& row_weights);
ForestModel fit_forest(const std::vector<FeatureVector>& X, const std::vector<int>& y,
                       const TrainConfig& config);
GbtModel fit_gbt(const std::vector<FeatureVector>& X, const std::vector<int>& y,
                 const TrainConfig& config);

/// Balanced class weights w_c = N / (2 N_c).
std::array<double, 2> balanced_class_weights(const std::vector<int>& y);

}  // namespace floodgraph
