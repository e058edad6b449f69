#include "floodgraph/sage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "floodgraph/rng.hpp"

namespace floodgraph {

namespace {

struct Adjacency {
  // per node: (neighbor, aggregation coefficient), coefficients sum to 1
  std::vector<std::vector<std::pair<int, double>>> in;
};

Adjacency make_adjacency(const BasinGraph& graph, bool weighted) {
  Adjacency adj;
  adj.in = graph.in_neighbors();
  for (auto& nbrs : adj.in) {
    if (nbrs.empty()) continue;
    double denom = 0.0;
    for (auto& [u, w] : nbrs) denom += weighted ? w : 1.0;
    for (auto& [u, w] : nbrs) w = (weighted ? w : 1.0) / denom;
  }
  return adj;
}

// Dense per-layer state for one forward pass.
struct Layerwork {
  std::vector<double> input;    // n x in  (post-dropout activations fed to this layer)
  std::vector<double> agg;      // n x in
  std::vector<double> z;        // n x out (pre-activation)
  std::vector<double> act;      // n x out (post-ReLU, hidden layers only)
  std::vector<char> mask;       // n x out dropout keep mask (training only)
};

struct Forward {
  std::array<Layerwork, 3> layer;
  std::vector<double> logits;  // n x 2
};

void aggregate(const Adjacency& adj, const std::vector<double>& h, int width,
               std::vector<double>& out) {
  const std::size_t n = adj.in.size();
  out.assign(n * static_cast<std::size_t>(width), 0.0);
  for (std::size_t v = 0; v < n; ++v)
    for (const auto& [u, coef] : adj.in[v])
      for (int j = 0; j < width; ++j)
        out[v * width + static_cast<std::size_t>(j)] +=
            coef * h[static_cast<std::size_t>(u) * width + static_cast<std::size_t>(j)];
}

Forward run_forward(const SageModel& model, const BasinGraph& graph, const Adjacency& adj,
                    bool training, Rng* drop_rng) {
  const std::size_t n = static_cast<std::size_t>(graph.num_nodes());
  Forward fw;

  std::vector<double> h(n * 12);
  for (std::size_t v = 0; v < n; ++v)
    for (int j = 0; j < 12; ++j)
      h[v * 12 + static_cast<std::size_t>(j)] =
          (graph.features[v][static_cast<std::size_t>(j)] - model.feat_mean[static_cast<std::size_t>(j)]) /
          model.feat_scale[static_cast<std::size_t>(j)];

  const double keep = 1.0 - model.dropout_p;
  for (int k = 0; k < 3; ++k) {
    const int in_w = SageModel::kDims[static_cast<std::size_t>(k)];
    const int out_w = SageModel::kDims[static_cast<std::size_t>(k) + 1];
    Layerwork& lw = fw.layer[static_cast<std::size_t>(k)];
    lw.input = h;
    aggregate(adj, h, in_w, lw.agg);

    lw.z.assign(n * static_cast<std::size_t>(out_w), 0.0);
    const auto& W = model.W[static_cast<std::size_t>(k)];
    const auto& b = model.b[static_cast<std::size_t>(k)];
    for (std::size_t v = 0; v < n; ++v) {
      for (int o = 0; o < out_w; ++o) {
        double s = b[static_cast<std::size_t>(o)];
        const double* wrow = &W[static_cast<std::size_t>(o) * 2 * static_cast<std::size_t>(in_w)];
        for (int j = 0; j < in_w; ++j) {
          s += wrow[j] * lw.input[v * in_w + static_cast<std::size_t>(j)];
          s += wrow[in_w + j] * lw.agg[v * in_w + static_cast<std::size_t>(j)];
        }
        lw.z[v * out_w + static_cast<std::size_t>(o)] = s;
      }
    }

    if (k == 2) {
      fw.logits = lw.z;
      break;
    }
    lw.act.assign(lw.z.size(), 0.0);
    for (std::size_t i = 0; i < lw.z.size(); ++i) lw.act[i] = lw.z[i] > 0.0 ? lw.z[i] : 0.0;
    h = lw.act;
    if (training && model.dropout_p > 0.0) {
      lw.mask.assign(h.size(), 1);
      for (std::size_t i = 0; i < h.size(); ++i) {
        if (drop_rng->next_double() < model.dropout_p) {
          lw.mask[i] = 0;
          h[i] = 0.0;
        } else {
          h[i] /= keep;  // inverted scaling: inference needs no rescale
        }
      }
    }
  }
  return fw;
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> dlogits;  // n x 2
};

LossGrad weighted_ce(const std::vector<double>& logits, const std::vector<int>& labels,
                     const std::array<double, 2>& class_weights,
                     const std::vector<char>& node_mask) {
  const std::size_t n = labels.size();
  LossGrad lg;
  lg.dlogits.assign(n * 2, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    if (!node_mask.empty() && !node_mask[v]) continue;
    const double z0 = logits[v * 2], z1 = logits[v * 2 + 1];
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    const double denom = e0 + e1;
    const double p0 = e0 / denom, p1 = e1 / denom;
    const int y = labels[v];
    const double w = class_weights[static_cast<std::size_t>(y)];
    lg.loss -= w * std::log(std::max(y == 1 ? p1 : p0, 1e-300));
    lg.dlogits[v * 2] = w * (p0 - (y == 0 ? 1.0 : 0.0));
    lg.dlogits[v * 2 + 1] = w * (p1 - (y == 1 ? 1.0 : 0.0));
  }
  return lg;
}

SageGradients run_backward(const SageModel& model, const Adjacency& adj, const Forward& fw,
                           const LossGrad& lg, bool training) {
  const std::size_t n = adj.in.size();
  SageGradients g;
  for (int k = 0; k < 3; ++k) {
    g.dW[static_cast<std::size_t>(k)].assign(model.W[static_cast<std::size_t>(k)].size(), 0.0);
    g.db[static_cast<std::size_t>(k)].assign(model.b[static_cast<std::size_t>(k)].size(), 0.0);
  }
  g.loss = lg.loss;

  const double keep = 1.0 - model.dropout_p;
  std::vector<double> dz = lg.dlogits;
  for (int k = 2; k >= 0; --k) {
    const int in_w = SageModel::kDims[static_cast<std::size_t>(k)];
    const int out_w = SageModel::kDims[static_cast<std::size_t>(k) + 1];
    const Layerwork& lw = fw.layer[static_cast<std::size_t>(k)];
    auto& dW = g.dW[static_cast<std::size_t>(k)];
    auto& db = g.db[static_cast<std::size_t>(k)];
    const auto& W = model.W[static_cast<std::size_t>(k)];

    // parameter gradients
    for (std::size_t v = 0; v < n; ++v) {
      for (int o = 0; o < out_w; ++o) {
        const double d = dz[v * out_w + static_cast<std::size_t>(o)];
        if (d == 0.0) continue;
        db[static_cast<std::size_t>(o)] += d;
        double* wrow = &dW[static_cast<std::size_t>(o) * 2 * static_cast<std::size_t>(in_w)];
        for (int j = 0; j < in_w; ++j) {
          wrow[j] += d * lw.input[v * in_w + static_cast<std::size_t>(j)];
          wrow[in_w + j] += d * lw.agg[v * in_w + static_cast<std::size_t>(j)];
        }
      }
    }
    if (k == 0) break;

    // gradient w.r.t. this layer's input activations (self + aggregation)
    std::vector<double> dinput(n * static_cast<std::size_t>(in_w), 0.0);
    std::vector<double> dagg(n * static_cast<std::size_t>(in_w), 0.0);
    for (std::size_t v = 0; v < n; ++v)
      for (int o = 0; o < out_w; ++o) {
        const double d = dz[v * out_w + static_cast<std::size_t>(o)];
        if (d == 0.0) continue;
        const double* wrow = &W[static_cast<std::size_t>(o) * 2 * static_cast<std::size_t>(in_w)];
        for (int j = 0; j < in_w; ++j) {
          dinput[v * in_w + static_cast<std::size_t>(j)] += d * wrow[j];
          dagg[v * in_w + static_cast<std::size_t>(j)] += d * wrow[in_w + j];
        }
      }
    // aggregation adjoint: mean over in-neighbors of v reads h_u
    for (std::size_t v = 0; v < n; ++v)
      for (const auto& [u, coef] : adj.in[v])
        for (int j = 0; j < in_w; ++j)
          dinput[static_cast<std::size_t>(u) * in_w + static_cast<std::size_t>(j)] +=
              coef * dagg[v * in_w + static_cast<std::size_t>(j)];

    // back through dropout and ReLU of layer k-1
    const Layerwork& prev = fw.layer[static_cast<std::size_t>(k - 1)];
    if (training && model.dropout_p > 0.0) {
      for (std::size_t i = 0; i < dinput.size(); ++i)
        dinput[i] = prev.mask[i] ? dinput[i] / keep : 0.0;
    }
    for (std::size_t i = 0; i < dinput.size(); ++i)
      if (prev.z[i] <= 0.0) dinput[i] = 0.0;
    dz = std::move(dinput);
  }
  return g;
}

}  // namespace

SageModel SageModel::init(std::uint64_t seed, double dropout_p, bool weighted_mean) {
  SageModel m;
  m.dropout_p = dropout_p;
  m.weighted_mean = weighted_mean;
  for (int k = 0; k < 3; ++k) {
    const int in_w = 2 * kDims[static_cast<std::size_t>(k)];
    const int out_w = kDims[static_cast<std::size_t>(k) + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in_w + out_w));
    Rng rng(mix_seed(seed, 0x5A6E00 + static_cast<std::uint64_t>(k)));
    auto& W = m.W[static_cast<std::size_t>(k)];
    W.resize(static_cast<std::size_t>(in_w) * static_cast<std::size_t>(out_w));
    for (auto& w : W) w = rng.next_uniform(-bound, bound);
    m.b[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(out_w), 0.0);
  }
  return m;
}

std::vector<std::array<double, 2>> sage_forward(const SageModel& model, const BasinGraph& graph,
                                                bool training_mode, std::uint64_t seed) {
  const Adjacency adj = make_adjacency(graph, model.weighted_mean);
  Rng rng(seed);
  Forward fw = run_forward(model, graph, adj, training_mode, &rng);
  std::vector<std::array<double, 2>> out(static_cast<std::size_t>(graph.num_nodes()));
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = {fw.logits[v * 2], fw.logits[v * 2 + 1]};
  return out;
}

std::vector<double> sage_node_probs(const SageModel& model, const BasinGraph& graph) {
  const auto logits = sage_forward(model, graph, false, 0);
  std::vector<double> probs(logits.size());
  for (std::size_t v = 0; v < logits.size(); ++v) {
    const double m = std::max(logits[v][0], logits[v][1]);
    const double e0 = std::exp(logits[v][0] - m), e1 = std::exp(logits[v][1] - m);
    probs[v] = e1 / (e0 + e1);
  }
  return probs;
}

double sage_relu_margin(const SageModel& model, const BasinGraph& graph) {
  const Adjacency adj = make_adjacency(graph, model.weighted_mean);
  const Forward fw = run_forward(model, graph, adj, false, nullptr);
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k)
    for (double z : fw.layer[static_cast<std::size_t>(k)].z)
      margin = std::min(margin, std::abs(z));
  return margin;
}

SageGradients sage_gradients(const SageModel& model, const BasinGraph& graph,
                             const std::vector<int>& labels,
                             const std::array<double, 2>& class_weights,
                             const std::vector<char>& node_mask) {
  if (labels.size() != static_cast<std::size_t>(graph.num_nodes()))
    throw std::invalid_argument("sage_gradients: labels/node count mismatch");
  const Adjacency adj = make_adjacency(graph, model.weighted_mean);
  Forward fw = run_forward(model, graph, adj, false, nullptr);
  const LossGrad lg = weighted_ce(fw.logits, labels, class_weights, node_mask);
  return run_backward(model, adj, fw, lg, false);
}

SageFitResult fit_sage(const BasinGraph& graph, const TrainConfig& config,
                       const std::vector<char>& train_mask) {
  const std::size_t n = static_cast<std::size_t>(graph.num_nodes());
  if (!train_mask.empty() && train_mask.size() != n)
    throw std::invalid_argument("fit_sage: mask/node count mismatch");

  // class weights and feature standardization come from training nodes only
  double n0 = 0.0, n1 = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    if (!train_mask.empty() && !train_mask[v]) continue;
    (graph.labels[v] ? n1 : n0) += 1.0;
  }
  if (n0 == 0.0 || n1 == 0.0)
    throw std::runtime_error("fit_sage: training nodes must contain both labels");
  const std::array<double, 2> class_weights = {(n0 + n1) / (2.0 * n0), (n0 + n1) / (2.0 * n1)};

  SageModel model = SageModel::init(config.seed, config.dropout_p, config.sage_weighted_mean);
  for (int j = 0; j < 12; ++j) {
    double m = 0.0, cnt = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (!train_mask.empty() && !train_mask[v]) continue;
      m += graph.features[v][static_cast<std::size_t>(j)];
      cnt += 1.0;
    }
    m /= cnt;
    double var = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (!train_mask.empty() && !train_mask[v]) continue;
      const double d = graph.features[v][static_cast<std::size_t>(j)] - m;
      var += d * d;
    }
    var /= cnt;
    model.feat_mean[static_cast<std::size_t>(j)] = m;
    model.feat_scale[static_cast<std::size_t>(j)] = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  const Adjacency adj = make_adjacency(graph, model.weighted_mean);
  Rng drop_rng(mix_seed(config.seed, 0xD20));

  // Adam state
  std::array<std::vector<double>, 3> mW, vW, mB, vB;
  for (int k = 0; k < 3; ++k) {
    mW[static_cast<std::size_t>(k)].assign(model.W[static_cast<std::size_t>(k)].size(), 0.0);
    vW[static_cast<std::size_t>(k)].assign(model.W[static_cast<std::size_t>(k)].size(), 0.0);
    mB[static_cast<std::size_t>(k)].assign(model.b[static_cast<std::size_t>(k)].size(), 0.0);
    vB[static_cast<std::size_t>(k)].assign(model.b[static_cast<std::size_t>(k)].size(), 0.0);
  }

  SageFitResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(config.epochs));

  const bool use_dropout = model.dropout_p > 0.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Forward fw = run_forward(model, graph, adj, use_dropout, &drop_rng);
    const LossGrad lg = weighted_ce(fw.logits, graph.labels, class_weights, train_mask);
    SageGradients g = run_backward(model, adj, fw, lg, use_dropout);
    result.loss_trace.push_back(lg.loss);

    const double bc1 = 1.0 - std::pow(config.adam_beta1, epoch);
    const double bc2 = 1.0 - std::pow(config.adam_beta2, epoch);
    auto adam_step = [&](std::vector<double>& theta, const std::vector<double>& grad,
                         std::vector<double>& m1, std::vector<double>& m2) {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double gi = grad[i] + config.weight_decay * theta[i];
        m1[i] = config.adam_beta1 * m1[i] + (1.0 - config.adam_beta1) * gi;
        m2[i] = config.adam_beta2 * m2[i] + (1.0 - config.adam_beta2) * gi * gi;
        const double mhat = m1[i] / bc1;
        const double vhat = m2[i] / bc2;
        theta[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
      }
    };
    for (int k = 0; k < 3; ++k) {
      adam_step(model.W[static_cast<std::size_t>(k)], g.dW[static_cast<std::size_t>(k)],
                mW[static_cast<std::size_t>(k)], vW[static_cast<std::size_t>(k)]);
      adam_step(model.b[static_cast<std::size_t>(k)], g.db[static_cast<std::size_t>(k)],
                mB[static_cast<std::size_t>(k)], vB[static_cast<std::size_t>(k)]);
    }
  }
  result.model = std::move(model);
  return result;
}

void store_sage_json(const SageModel& model, const TrainConfig& config,
                     const std::filesystem::path& path) {
  nlohmann::json j;
  j["kind"] = "graphsage";
  j["dims"] = SageModel::kDims;
  j["dropout_p"] = model.dropout_p;
  j["weighted_mean"] = model.weighted_mean;
  j["feat_mean"] = model.feat_mean;
  j["feat_scale"] = model.feat_scale;
  for (int k = 0; k < 3; ++k) {
    j["W"].push_back(model.W[static_cast<std::size_t>(k)]);
    j["b"].push_back(model.b[static_cast<std::size_t>(k)]);
  }
  j["config"] = {{"learning_rate", config.learning_rate},
                 {"weight_decay", config.weight_decay},
                 {"epochs", config.epochs},
                 {"seed", config.seed},
                 {"adam_beta1", config.adam_beta1},
                 {"adam_beta2", config.adam_beta2},
                 {"adam_eps", config.adam_eps}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << '\n';
}

SageModel load_sage_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  nlohmann::json j = nlohmann::json::parse(in);
  SageModel m;
  m.dropout_p = j.at("dropout_p").get<double>();
  m.weighted_mean = j.at("weighted_mean").get<bool>();
  m.feat_mean = j.at("feat_mean").get<FeatureVector>();
  m.feat_scale = j.at("feat_scale").get<FeatureVector>();
  for (int k = 0; k < 3; ++k) {
    m.W[static_cast<std::size_t>(k)] = j.at("W")[static_cast<std::size_t>(k)].get<std::vector<double>>();
    m.b[static_cast<std::size_t>(k)] = j.at("b")[static_cast<std::size_t>(k)].get<std::vector<double>>();
  }
  return m;
}

void store_loss_trace_csv(const std::vector<double>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "epoch,loss\n";
  char buf[48];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e + 1, trace[e]);
    out << buf;
  }
}

}  // namespace floodgraph
