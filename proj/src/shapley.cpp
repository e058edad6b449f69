#include "floodgraph/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>

#include "floodgraph/util.hpp"

namespace floodgraph {

namespace {

constexpr int kD = kNumFactors;
constexpr std::size_t kMasks = std::size_t{1} << kD;

// |S|! (d-|S|-1)! / d! for |S| = 0..d-1; all factorials fit a double exactly.
std::array<double, kD> coalition_weights() {
  std::array<double, kD + 1> fact{};
  fact[0] = 1.0;
  for (int i = 1; i <= kD; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;
  std::array<double, kD> w{};
  for (int s = 0; s < kD; ++s)
    w[static_cast<std::size_t>(s)] =
        fact[static_cast<std::size_t>(s)] * fact[static_cast<std::size_t>(kD - s - 1)] / fact[kD];
  return w;
}

}  // namespace

namespace {

// phi from a complete table of coalition values
void phi_from_values(const std::vector<double>& v, const std::array<double, kD>& weights,
                     FeatureVector& phi) {
  for (std::size_t mask = 0; mask < kMasks; ++mask) {
    const int s = std::popcount(mask);
    if (s == kD) continue;
    const double w = weights[static_cast<std::size_t>(s)];
    for (int j = 0; j < kD; ++j) {
      if ((mask >> j) & 1u) continue;
      phi[static_cast<std::size_t>(j)] += w * (v[mask | (std::size_t{1} << j)] - v[mask]);
    }
  }
}

// fills v[mask] with the interventional coalition values for one sample
using CoalitionValuesFn = std::function<void(const FeatureVector&, std::vector<double>&)>;

Attribution shapley_over_samples(const CoalitionValuesFn& values, double base_value,
                                 const std::vector<FeatureVector>& samples) {
  const auto weights = coalition_weights();
  Attribution attr;
  attr.base_value = base_value;
  attr.phi.assign(samples.size(), FeatureVector{});
  attr.predictions.assign(samples.size(), 0.0);
  parallel_for(samples.size(), [&](std::size_t si) {
    std::vector<double> v(kMasks, 0.0);
    values(samples[si], v);
    phi_from_values(v, weights, attr.phi[si]);
    attr.predictions[si] = v[kMasks - 1];
  });
  return attr;
}

}  // namespace

Attribution exact_shapley(const ModelFn& model, const std::vector<FeatureVector>& samples,
                          const std::vector<FeatureVector>& background) {
  if (background.empty()) throw std::invalid_argument("exact_shapley: empty background");
  const double nb = static_cast<double>(background.size());

  double base = 0.0;
  for (const auto& b : background) base += model(b);
  base /= nb;

  const CoalitionValuesFn values = [&](const FeatureVector& x, std::vector<double>& v) {
    FeatureVector mixed;
    for (const auto& b : background) {
      for (std::size_t mask = 0; mask < kMasks; ++mask) {
        for (int j = 0; j < kD; ++j)
          mixed[static_cast<std::size_t>(j)] =
              (mask >> j) & 1u ? x[static_cast<std::size_t>(j)] : b[static_cast<std::size_t>(j)];
        v[mask] += model(mixed);
      }
    }
    for (auto& val : v) val /= nb;
  };
  return shapley_over_samples(values, base, samples);
}

// --- batched coalition evaluation for fitted baselines --------------------------
//
// For one (sample, background row) pair a tree's output as a function of
// the coalition only depends on the features where the two rows take
// different branches. A single descent forks at those nodes and each leaf
// deposits its value on every mask consistent with the forks taken.

namespace {

void add_tree_masks(const Tree& tree, const FeatureVector& x, const FeatureVector& b,
                    double scale, std::vector<double>& out) {
  struct Frame {
    int node;
    unsigned fixed;  // mask bits constrained along this path
    unsigned val;    // required values of those bits (1 = feature from x)
  };
  std::vector<Frame> stack;
  stack.push_back({0, 0u, 0u});
  constexpr unsigned kAll = static_cast<unsigned>(kMasks - 1);
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const TreeNode& t = tree.nodes[static_cast<std::size_t>(f.node)];
    if (t.feature < 0) {
      const unsigned free_bits = kAll & ~f.fixed;
      const double add = scale * t.value;
      unsigned sub = 0;
      do {
        out[f.val | sub] += add;
        sub = (sub - free_bits) & free_bits;
      } while (sub != 0);
      continue;
    }
    const unsigned bit = 1u << t.feature;
    const bool x_left = x[static_cast<std::size_t>(t.feature)] <= t.threshold;
    const bool b_left = b[static_cast<std::size_t>(t.feature)] <= t.threshold;
    if (x_left == b_left) {
      stack.push_back({x_left ? t.left : t.right, f.fixed, f.val});
    } else if (f.fixed & bit) {
      const bool from_x = (f.val & bit) != 0;
      const bool go_left = from_x ? x_left : b_left;
      stack.push_back({go_left ? t.left : t.right, f.fixed, f.val});
    } else {
      stack.push_back({x_left ? t.left : t.right, f.fixed | bit, f.val | bit});
      stack.push_back({b_left ? t.left : t.right, f.fixed | bit, f.val});
    }
  }
}

// per-mask linear predictor via one-bit increments
void logistic_masks(const LogisticModel& m, const FeatureVector& x, const FeatureVector& b,
                    std::vector<double>& prob_out) {
  double base = m.bias;
  std::array<double, kD> delta{};
  for (int j = 0; j < kD; ++j) {
    base += m.weights[static_cast<std::size_t>(j)] *
            (b[static_cast<std::size_t>(j)] - m.feat_mean[static_cast<std::size_t>(j)]) /
            m.feat_scale[static_cast<std::size_t>(j)];
    delta[static_cast<std::size_t>(j)] =
        m.weights[static_cast<std::size_t>(j)] *
        (x[static_cast<std::size_t>(j)] - b[static_cast<std::size_t>(j)]) /
        m.feat_scale[static_cast<std::size_t>(j)];
  }
  prob_out[0] = base;
  for (std::size_t mask = 1; mask < kMasks; ++mask)
    prob_out[mask] = prob_out[mask & (mask - 1)] +
                     delta[static_cast<std::size_t>(std::countr_zero(mask))];
  for (auto& z : prob_out) z = 1.0 / (1.0 + std::exp(-z));
}

void forest_masks(const ForestModel& m, const FeatureVector& x, const FeatureVector& b,
                  std::vector<double>& prob_out) {
  std::fill(prob_out.begin(), prob_out.end(), 0.0);
  const double scale = 1.0 / static_cast<double>(m.trees.size());
  for (const auto& tree : m.trees) add_tree_masks(tree, x, b, scale, prob_out);
}

void gbt_masks(const GbtModel& m, const FeatureVector& x, const FeatureVector& b,
               std::vector<double>& prob_out) {
  std::fill(prob_out.begin(), prob_out.end(), m.base_score);
  for (const auto& tree : m.trees) add_tree_masks(tree, x, b, m.shrinkage, prob_out);
  for (auto& z : prob_out) z = 1.0 / (1.0 + std::exp(-z));
}

void baseline_masks(const BaselineModel& model, const FeatureVector& x, const FeatureVector& b,
                    std::vector<double>& prob_out, std::vector<double>& scratch_a,
                    std::vector<double>& scratch_b) {
  switch (model.kind) {
    case BaselineKind::logistic:
      logistic_masks(std::get<LogisticModel>(model.impl), x, b, prob_out);
      break;
    case BaselineKind::forest:
      forest_masks(std::get<ForestModel>(model.impl), x, b, prob_out);
      break;
    case BaselineKind::gbt:
      gbt_masks(std::get<GbtModel>(model.impl), x, b, prob_out);
      break;
    case BaselineKind::stacking: {
      const auto& s = std::get<StackingModel>(model.impl);
      logistic_masks(s.logistic_base, x, b, scratch_a);
      forest_masks(s.forest_base, x, b, scratch_b);
      gbt_masks(s.gbt_base, x, b, prob_out);  // prob_out holds the gbt probs for now
      const auto& meta = s.meta;
      for (std::size_t mask = 0; mask < kMasks; ++mask) {
        double z = meta.bias;
        z += meta.weights[0] * (scratch_a[mask] - meta.feat_mean[0]) / meta.feat_scale[0];
        z += meta.weights[1] * (scratch_b[mask] - meta.feat_mean[1]) / meta.feat_scale[1];
        z += meta.weights[2] * (prob_out[mask] - meta.feat_mean[2]) / meta.feat_scale[2];
        prob_out[mask] = 1.0 / (1.0 + std::exp(-z));
      }
      break;
    }
  }
}

}  // namespace

Attribution exact_shapley(const BaselineModel& model, const std::vector<FeatureVector>& samples,
                          const std::vector<FeatureVector>& background, ShapTarget target) {
  if (background.empty()) throw std::invalid_argument("exact_shapley: empty background");
  const double nb = static_cast<double>(background.size());
  const ModelFn fn = baseline_model_fn(model, target);

  double base = 0.0;
  for (const auto& b : background) base += fn(b);
  base /= nb;

  const CoalitionValuesFn values = [&](const FeatureVector& x, std::vector<double>& v) {
    std::vector<double> probs(kMasks), sa(kMasks), sb(kMasks);
    for (const auto& b : background) {
      baseline_masks(model, x, b, probs, sa, sb);
      if (target == ShapTarget::logit) {
        for (std::size_t mask = 0; mask < kMasks; ++mask) {
          const double p = std::clamp(probs[mask], 1e-12, 1.0 - 1e-12);
          v[mask] += std::log(p / (1.0 - p));
        }
      } else {
        for (std::size_t mask = 0; mask < kMasks; ++mask) v[mask] += probs[mask];
      }
    }
    for (auto& val : v) val /= nb;
  };
  return shapley_over_samples(values, base, samples);
}

std::vector<std::pair<int, double>> global_importance(const Attribution& attr) {
  if (attr.phi.empty()) throw std::invalid_argument("global_importance: no samples");
  std::vector<std::pair<int, double>> ranked(kD);
  for (int j = 0; j < kD; ++j) {
    double s = 0.0;
    for (const auto& phi : attr.phi) s += std::abs(phi[static_cast<std::size_t>(j)]);
    ranked[static_cast<std::size_t>(j)] = {j, s / static_cast<double>(attr.phi.size())};
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // stable keeps canonical order on ties
  });
  return ranked;
}

namespace {

int dominant_of(const FeatureVector& phi) {
  int best = 0;
  double best_abs = std::abs(phi[0]);
  for (int j = 1; j < kD; ++j) {
    const double a = std::abs(phi[static_cast<std::size_t>(j)]);
    if (a > best_abs) {  // strict: ties keep the canonical (lowest) index
      best_abs = a;
      best = j;
    }
  }
  return best;
}

}  // namespace

namespace {

using AttributeFn = std::function<Attribution(const std::vector<FeatureVector>&)>;

Grid dominant_map_impl(const AttributeFn& attribute, const FactorStack& stack,
                       const WatershedPartition* partition) {
  stack.validate();
  const Grid& ref = stack.grids[0];

  if (partition) {
    require_same_georef(ref, partition->labels, "dominant_factor_map");
    // one attribution per watershed at its mean feature vector
    const int n = partition->count;
    std::vector<FeatureVector> units(static_cast<std::size_t>(n), FeatureVector{});
    std::vector<std::array<long, kD>> counts(static_cast<std::size_t>(n),
                                             std::array<long, kD>{});
    for (int r = 0; r < ref.nrows; ++r)
      for (int c = 0; c < ref.ncols; ++c) {
        if (!partition->labels.valid_at(r, c)) continue;
        const auto w = static_cast<std::size_t>(partition->labels.at(r, c));
        for (int j = 0; j < kD; ++j) {
          const double v = stack.grids[static_cast<std::size_t>(j)].at(r, c);
          if (stack.grids[static_cast<std::size_t>(j)].is_nodata(v)) continue;
          units[w][static_cast<std::size_t>(j)] += v;
          ++counts[w][static_cast<std::size_t>(j)];
        }
      }
    for (std::size_t w = 0; w < units.size(); ++w)
      for (int j = 0; j < kD; ++j)
        if (counts[w][static_cast<std::size_t>(j)] > 0)
          units[w][static_cast<std::size_t>(j)] /=
              static_cast<double>(counts[w][static_cast<std::size_t>(j)]);

    const Attribution attr = attribute(units);
    std::vector<int> dom(units.size());
    for (std::size_t w = 0; w < units.size(); ++w) dom[w] = dominant_of(attr.phi[w]);

    Grid out = ref.like(ref.nodata);
    for (int r = 0; r < ref.nrows; ++r)
      for (int c = 0; c < ref.ncols; ++c)
        if (partition->labels.valid_at(r, c))
          out.at(r, c) = dom[static_cast<std::size_t>(partition->labels.at(r, c))];
    return out;
  }

  // per-cell attribution over all fully valid cells
  std::vector<FeatureVector> cells;
  std::vector<std::size_t> cell_idx;
  for (int r = 0; r < ref.nrows; ++r)
    for (int c = 0; c < ref.ncols; ++c) {
      FeatureVector f{};
      bool ok = true;
      for (int j = 0; j < kD && ok; ++j) {
        const double v = stack.grids[static_cast<std::size_t>(j)].at(r, c);
        if (stack.grids[static_cast<std::size_t>(j)].is_nodata(v))
          ok = false;
        else
          f[static_cast<std::size_t>(j)] = v;
      }
      if (ok) {
        cells.push_back(f);
        cell_idx.push_back(ref.idx(r, c));
      }
    }
  const Attribution attr = attribute(cells);
  Grid out = ref.like(ref.nodata);
  for (std::size_t i = 0; i < cells.size(); ++i)
    out.values[cell_idx[i]] = dominant_of(attr.phi[i]);
  return out;
}

}  // namespace

Grid dominant_factor_map(const ModelFn& model, const FactorStack& stack,
                         const std::vector<FeatureVector>& background,
                         const WatershedPartition* partition) {
  return dominant_map_impl(
      [&](const std::vector<FeatureVector>& units) {
        return exact_shapley(model, units, background);
      },
      stack, partition);
}

Grid dominant_factor_map(const BaselineModel& model, const FactorStack& stack,
                         const std::vector<FeatureVector>& background,
                         const WatershedPartition* partition) {
  return dominant_map_impl(
      [&](const std::vector<FeatureVector>& units) {
        return exact_shapley(model, units, background);
      },
      stack, partition);
}

DistrictAttribution district_aggregate(const Attribution& attr,
                                       const std::vector<std::pair<double, double>>& locations,
                                       const Grid& districts) {
  if (locations.size() != attr.phi.size())
    throw std::invalid_argument("district_aggregate: locations/attribution mismatch");

  DistrictAttribution out;
  std::map<int, long> counts;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const int r = districts.row_of_y(locations[i].second);
    const int c = districts.col_of_x(locations[i].first);
    if (!districts.in_bounds(r, c) || !districts.valid_at(r, c)) {
      ++out.skipped_samples;
      continue;
    }
    const int d = static_cast<int>(districts.at(r, c));
    auto& acc = out.mean_abs_phi[d];
    for (int j = 0; j < kD; ++j)
      acc[static_cast<std::size_t>(j)] += std::abs(attr.phi[i][static_cast<std::size_t>(j)]);
    ++counts[d];
  }
  for (auto& [d, acc] : out.mean_abs_phi) {
    for (int j = 0; j < kD; ++j) acc[static_cast<std::size_t>(j)] /= static_cast<double>(counts[d]);
    out.dominant_factor[d] = dominant_of(acc);
  }

  std::set<int> present;
  for (double v : districts.values)
    if (!districts.is_nodata(v)) present.insert(static_cast<int>(v));
  for (int d : present)
    if (!counts.count(d)) out.empty_districts.push_back(d);
  return out;
}

void store_attribution_csv(const Attribution& attr, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "sample_id";
  for (const char* name : kFactorNames) out << ",phi_" << name;
  out << ",base_value,prediction\n";
  char buf[48];
  for (std::size_t i = 0; i < attr.phi.size(); ++i) {
    out << i;
    for (double p : attr.phi[i]) {
      std::snprintf(buf, sizeof(buf), ",%.10g", p);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.10g,%.10g\n", attr.base_value, attr.predictions[i]);
    out << buf;
  }
}

ModelFn baseline_model_fn(const BaselineModel& model, ShapTarget target) {
  if (target == ShapTarget::probability)
    return [&model](const FeatureVector& x) { return predict_baseline(model, x); };
  return [&model](const FeatureVector& x) {
    const double p = std::clamp(predict_baseline(model, x), 1e-12, 1.0 - 1e-12);
    return std::log(p / (1.0 - p));
  };
}

}  // namespace floodgraph
