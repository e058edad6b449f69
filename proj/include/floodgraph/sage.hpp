#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "floodgraph/baselines.hpp"
#include "floodgraph/basin_graph.hpp"

namespace floodgraph {

/// Three-layer GraphSAGE classifier (12 -> 64 -> 64 -> 2). Each layer
/// applies a linear map to the concatenation of a node's own embedding
/// with the mean of its in-neighbors' embeddings (downstream plus reverse
/// edges), ReLU on the hidden layers, inverted dropout between layers in
/// training mode, linear output.
struct SageModel {
  static constexpr std::array<int, 4> kDims{12, 64, 64, 2};

  // W[k] is row-major (kDims[k+1]) x (2*kDims[k]): self block first,
  // aggregated block second.
  std::array<std::vector<double>, 3> W;
  std::array<std::vector<double>, 3> b;
  double dropout_p = 0.30;
  bool weighted_mean = true;  // normalize the aggregation by edge weights
  FeatureVector feat_mean{};
  FeatureVector feat_scale{};

  SageModel() { feat_scale.fill(1.0); }

  /// Glorot-uniform initialization, deterministic in the seed.
  static SageModel init(std::uint64_t seed, double dropout_p = 0.30,
                        bool weighted_mean = true);
};

/// Per-node logits. Dropout masks are drawn from `seed` in training mode
/// and ignored otherwise.
std::vector<std::array<double, 2>> sage_forward(const SageModel& model, const BasinGraph& graph,
                                                bool training_mode, std::uint64_t seed);

/// Softmax class-1 probabilities at inference.
std::vector<double> sage_node_probs(const SageModel& model, const BasinGraph& graph);

/// Smallest |hidden preactivation| of an inference pass. Gradient checks
/// against central differences are only meaningful when this margin stays
/// above the perturbation reach, away from the ReLU kinks.
double sage_relu_margin(const SageModel& model, const BasinGraph& graph);

struct SageGradients {
  std::array<std::vector<double>, 3> dW;
  std::array<std::vector<double>, 3> db;
  double loss = 0.0;
};

/// Exact reverse-mode gradients of the class-weighted cross-entropy
///   L = sum_v w_{y_v} * CE(softmax(logits_v), y_v)
/// over the nodes selected by `node_mask` (all nodes when empty), dropout
/// off. The finite-difference check in the tests pins these down.
SageGradients sage_gradients(const SageModel& model, const BasinGraph& graph,
                             const std::vector<int>& labels,
                             const std::array<double, 2>& class_weights,
                             const std::vector<char>& node_mask = {});

struct SageFitResult {
  SageModel model;
  std::vector<double> loss_trace;  // per-epoch loss before each update
};

/// Full-batch Adam training for config.epochs epochs with balanced class
/// weights computed on the training nodes; weight decay enters as a
/// gradient term. `train_mask` restricts the loss (and the feature
/// standardization) to a node subset; empty means all nodes.
SageFitResult fit_sage(const BasinGraph& graph, const TrainConfig& config,
                       const std::vector<char>& train_mask = {});

void store_sage_json(const SageModel& model, const TrainConfig& config,
                     const std::filesystem::path& path);
SageModel load_sage_json(const std::filesystem::path& path);

void store_loss_trace_csv(const std::vector<double>& trace, const std::filesystem::path& path);

}  // namespace floodgraph
