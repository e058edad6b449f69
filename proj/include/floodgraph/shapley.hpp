#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "floodgraph/baselines.hpp"
#include "floodgraph/factors.hpp"
#include "floodgraph/terrain.hpp"

namespace floodgraph {

/// Any scalar-valued model over the 12-factor vector.
using ModelFn = std::function<double(const FeatureVector&)>;

struct Attribution {
  std::vector<FeatureVector> phi;   // per-sample Shapley values
  double base_value = 0.0;          // expected model output over the background
  std::vector<double> predictions;  // f(x) per sample
};

/// Exact Shapley values by full coalition enumeration (2^12 subsets) with
/// the interventional value function: v(S) averages the model over
/// background rows with the features in S taken from the sample. The
/// efficiency identity sum_j phi_j = f(x) - base_value holds to rounding.
Attribution exact_shapley(const ModelFn& model, const std::vector<FeatureVector>& samples,
                          const std::vector<FeatureVector>& background);

/// Same enumeration for a fitted baseline, evaluating each tree once per
/// (sample, background) pair with a descent that forks only where the two
/// rows take different branches. Identical results to the generic path up
/// to summation rounding; the unit tests pin the two routes together.
enum class ShapTarget { probability, logit };
Attribution exact_shapley(const BaselineModel& model, const std::vector<FeatureVector>& samples,
                          const std::vector<FeatureVector>& background,
                          ShapTarget target = ShapTarget::probability);

/// Factors ranked by mean |phi| (descending, ties by canonical order).
std::vector<std::pair<int, double>> global_importance(const Attribution& attr);

/// Per-unit argmax_j |phi_j| as a raster of factor indices. With a
/// partition the unit is the watershed (attributed at its mean feature
/// vector); without one every valid cell is attributed individually.
Grid dominant_factor_map(const ModelFn& model, const FactorStack& stack,
                         const std::vector<FeatureVector>& background,
                         const WatershedPartition* partition);
Grid dominant_factor_map(const BaselineModel& model, const FactorStack& stack,
                         const std::vector<FeatureVector>& background,
                         const WatershedPartition* partition);

struct DistrictAttribution {
  // district id -> per-factor mean |phi| and its dominant factor
  std::map<int, FeatureVector> mean_abs_phi;
  std::map<int, int> dominant_factor;
  int skipped_samples = 0;          // samples outside every district
  std::vector<int> empty_districts; // ids present in the raster with no samples
};

/// Aggregate sample attributions over a district-id raster.
DistrictAttribution district_aggregate(const Attribution& attr,
                                       const std::vector<std::pair<double, double>>& locations,
                                       const Grid& districts);

/// Attribution CSV: sample_id,<12 phi columns>,base_value,prediction
void store_attribution_csv(const Attribution& attr, const std::filesystem::path& path);

/// Wrap a fitted baseline as a ModelFn; target selects the attributed
/// output (probability by default, log-odds optionally).
ModelFn baseline_model_fn(const BaselineModel& model, ShapTarget target = ShapTarget::probability);

}  // namespace floodgraph
