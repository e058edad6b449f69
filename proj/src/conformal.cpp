#include "floodgraph/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace floodgraph {

CalibratedPredictor calibrate(const std::vector<double>& probs_true_class, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("calibrate: alpha must be in (0, 1)");
  if (probs_true_class.empty())
    throw std::invalid_argument("calibrate: empty calibration set");
  for (double p : probs_true_class)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("calibrate: probability outside [0, 1]");

  CalibratedPredictor cal;
  cal.alpha = alpha;
  cal.n_cal = static_cast<int>(probs_true_class.size());
  cal.scores.reserve(probs_true_class.size());
  for (double p : probs_true_class) cal.scores.push_back(1.0 - p);
  std::sort(cal.scores.begin(), cal.scores.end());

  const double n = static_cast<double>(cal.n_cal);
  const auto k = static_cast<long>(std::ceil((1.0 - alpha) * (n + 1.0)));
  if (k > cal.n_cal) {
    cal.qhat = 1.0;
    cal.saturated = true;
  } else {
    cal.qhat = cal.scores[static_cast<std::size_t>(k - 1)];
    cal.saturated = false;
  }
  return cal;
}

PredictionSet predict_set(const CalibratedPredictor& cal,
                          const std::array<double, 2>& class_probs) {
  PredictionSet set;
  set.contains_class0 = (1.0 - class_probs[0]) <= cal.qhat;
  set.contains_class1 = (1.0 - class_probs[1]) <= cal.qhat;
  return set;
}

IntervalMaps interval_maps(const CalibratedPredictor& cal, const Grid& susceptibility) {
  IntervalMaps maps{susceptibility.like(susceptibility.nodata),
                    susceptibility.like(susceptibility.nodata),
                    susceptibility.like(susceptibility.nodata)};
  for (std::size_t i = 0; i < susceptibility.size(); ++i) {
    const double p = susceptibility.values[i];
    if (susceptibility.is_nodata(p)) continue;
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("interval_maps: susceptibility outside [0, 1]");
    const double lo = std::max(p - cal.qhat, 0.0);
    const double hi = std::min(p + cal.qhat, 1.0);
    maps.lower.values[i] = lo;
    maps.upper.values[i] = hi;
    maps.width.values[i] = hi - lo;
  }
  return maps;
}

CoverageReport coverage_report(const CalibratedPredictor& cal,
                               const std::vector<std::array<double, 2>>& test_probs,
                               const std::vector<int>& test_labels,
                               const std::vector<int>& susceptibility_class) {
  const std::size_t n = test_probs.size();
  if (test_labels.size() != n || susceptibility_class.size() != n)
    throw std::invalid_argument("coverage_report: misaligned inputs");
  if (n == 0) throw std::invalid_argument("coverage_report: empty test set");

  CoverageReport rep;
  rep.n_test = static_cast<int>(n);
  std::array<long, 4> strat_n{};
  std::array<long, 4> strat_cov{};
  long covered = 0, empty_sets = 0;
  double width_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const PredictionSet set = predict_set(cal, test_probs[i]);
    const bool hit = set.contains(test_labels[i]);
    covered += hit ? 1 : 0;
    empty_sets += set.size() == 0 ? 1 : 0;
    const double p1 = test_probs[i][1];
    width_sum += std::min(p1 + cal.qhat, 1.0) - std::max(p1 - cal.qhat, 0.0);
    const int cls = susceptibility_class[i];
    if (cls >= 0 && cls < 4) {
      ++strat_n[static_cast<std::size_t>(cls)];
      strat_cov[static_cast<std::size_t>(cls)] += hit ? 1 : 0;
    }
  }
  rep.overall = static_cast<double>(covered) / static_cast<double>(n);
  rep.empty_set_fraction = static_cast<double>(empty_sets) / static_cast<double>(n);
  rep.mean_width = width_sum / static_cast<double>(n);
  rep.mean_half_width = 0.5 * rep.mean_width;
  for (std::size_t c = 0; c < 4; ++c)
    rep.by_class[c] = strat_n[c] > 0
                          ? static_cast<double>(strat_cov[c]) / static_cast<double>(strat_n[c])
                          : kCoverageUndefined;
  return rep;
}

void store_coverage_json(const CalibratedPredictor& cal, const CoverageReport& report,
                         const std::filesystem::path& path) {
  nlohmann::json j;
  j["alpha"] = cal.alpha;
  j["qhat"] = cal.qhat;
  j["n_cal"] = cal.n_cal;
  j["saturated"] = cal.saturated;
  j["overall"] = report.overall;
  auto cov = [&](double v) -> nlohmann::json {
    if (v == kCoverageUndefined) return nullptr;
    return v;
  };
  j["by_class"] = {{"low", cov(report.by_class[0])},
                   {"moderate", cov(report.by_class[1])},
                   {"high", cov(report.by_class[2])},
                   {"very_high", cov(report.by_class[3])}};
  j["mean_width"] = report.mean_width;
  j["mean_half_width"] = report.mean_half_width;
  j["empty_set_fraction"] = report.empty_set_fraction;
  j["n_test"] = report.n_test;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << '\n';
}

}  // namespace floodgraph
