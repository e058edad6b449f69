#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "floodgraph/grid.hpp"

namespace floodgraph {

/// Split-conformal calibration state. qhat is the ceil((1-alpha)(n+1))-th
/// smallest non-conformity score (1 when that index exceeds n).
struct CalibratedPredictor {
  double alpha = 0.10;
  double qhat = 1.0;
  int n_cal = 0;
  std::vector<double> scores;  // sorted ascending
  bool saturated = false;      // calibration too small for the requested level
};

/// Calibrate from the predicted probabilities of the true class; the
/// non-conformity score is 1 - p(true class).
CalibratedPredictor calibrate(const std::vector<double>& probs_true_class, double alpha);

/// Prediction set {y : 1 - p(y) <= qhat}; either flag may be false
/// (empty set) or both true.
struct PredictionSet {
  bool contains_class0 = false;
  bool contains_class1 = false;
  bool contains(int y) const { return y == 0 ? contains_class0 : contains_class1; }
  int size() const { return (contains_class0 ? 1 : 0) + (contains_class1 ? 1 : 0); }
};

PredictionSet predict_set(const CalibratedPredictor& cal, const std::array<double, 2>& class_probs);

/// Symmetric clamped interval around the point estimate:
/// lower = max(p - qhat, 0), upper = min(p + qhat, 1), width = upper - lower.
struct IntervalMaps {
  Grid lower;
  Grid upper;
  Grid width;
};

IntervalMaps interval_maps(const CalibratedPredictor& cal, const Grid& susceptibility);

inline constexpr double kCoverageUndefined = -1.0;  // empty stratum sentinel

struct CoverageReport {
  double overall = 0.0;
  std::array<double, 4> by_class{};  // Low, Moderate, High, VeryHigh
  double mean_width = 0.0;
  double mean_half_width = 0.0;
  double empty_set_fraction = 0.0;
  int n_test = 0;
};

/// Empirical coverage of predict_set on aligned test rows, stratified by
/// susceptibility class (0..3); empty strata report kCoverageUndefined.
CoverageReport coverage_report(const CalibratedPredictor& cal,
                               const std::vector<std::array<double, 2>>& test_probs,
                               const std::vector<int>& test_labels,
                               const std::vector<int>& susceptibility_class);

/// Coverage JSON:
/// {alpha, qhat, n_cal, overall, by_class{low,moderate,high,very_high},
///  mean_width, mean_half_width, empty_set_fraction, n_test}
void store_coverage_json(const CalibratedPredictor& cal, const CoverageReport& report,
                         const std::filesystem::path& path);

}  // namespace floodgraph
