#include "lpgnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lpgnet/metrics.hpp"

namespace lpgnet {

std::string to_string(AdjNorm mode) {
  return mode == AdjNorm::first_order_gcn ? "first_order_gcn" : "aug_norm_adj";
}

AdjNorm adj_norm_from_string(const std::string& name) {
  if (name == "first_order_gcn") return AdjNorm::first_order_gcn;
  if (name == "aug_norm_adj") return AdjNorm::aug_norm_adj;
  throw std::invalid_argument("unknown adjacency normalization \"" + name + "\"");
}

NormalizedAdjacency normalize_adjacency(const Graph& graph, AdjNorm mode) {
  const int n = graph.num_nodes();
  NormalizedAdjacency a;
  a.mode = mode;
  a.n = n;
  a.row_offsets.assign(static_cast<size_t>(n) + 1, 0);

  std::vector<double> inv_sqrt(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) {
    const double d = static_cast<double>(graph.degree(v)) +
                     (mode == AdjNorm::aug_norm_adj ? 1.0 : 0.0);
    inv_sqrt[static_cast<size_t>(v)] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }

  const bool diag = mode == AdjNorm::first_order_gcn;
  for (int v = 0; v < n; ++v)
    a.row_offsets[static_cast<size_t>(v) + 1] =
        a.row_offsets[static_cast<size_t>(v)] + graph.degree(v) + (diag ? 1 : 0);
  a.col_indices.resize(static_cast<size_t>(a.row_offsets[static_cast<size_t>(n)]));
  a.values.resize(a.col_indices.size());

  for (int v = 0; v < n; ++v) {
    auto pos = static_cast<size_t>(a.row_offsets[static_cast<size_t>(v)]);
    bool diag_written = false;
    for (int u : graph.neighbors(v)) {
      if (diag && !diag_written && u > v) {
        a.col_indices[pos] = v;
        a.values[pos] = 1.0;
        ++pos;
        diag_written = true;
      }
      a.col_indices[pos] = u;
      a.values[pos] = inv_sqrt[static_cast<size_t>(v)] * inv_sqrt[static_cast<size_t>(u)];
      ++pos;
    }
    if (diag && !diag_written) {
      a.col_indices[pos] = v;
      a.values[pos] = 1.0;
    }
  }
  return a;
}

NormalizedAdjacency identity_adjacency(int n) {
  NormalizedAdjacency a;
  a.mode = AdjNorm::first_order_gcn;
  a.n = n;
  a.row_offsets.resize(static_cast<size_t>(n) + 1);
  a.col_indices.resize(static_cast<size_t>(n));
  a.values.assign(static_cast<size_t>(n), 1.0);
  for (int v = 0; v <= n; ++v) a.row_offsets[static_cast<size_t>(v)] = v;
  std::iota(a.col_indices.begin(), a.col_indices.end(), 0);
  return a;
}

DenseMatrix spmm(const NormalizedAdjacency& a, const DenseMatrix& x) {
  if (a.n != x.rows()) throw std::invalid_argument("spmm: dimension mismatch");
  DenseMatrix y(a.n, x.cols());
  for (int i = 0; i < a.n; ++i) {
    auto yi = y.row(i);
    for (int64_t k = a.row_offsets[static_cast<size_t>(i)];
         k < a.row_offsets[static_cast<size_t>(i) + 1]; ++k) {
      const double w = a.values[static_cast<size_t>(k)];
      const auto xj = x.row(a.col_indices[static_cast<size_t>(k)]);
      for (int c = 0; c < x.cols(); ++c) yi[static_cast<size_t>(c)] += w * xj[static_cast<size_t>(c)];
    }
  }
  return y;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning rate must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("config: dropout must be in [0,1)");
  if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (hidden_size < 1) throw std::invalid_argument("config: hidden size must be >= 1");
  if (num_hidden < 0) throw std::invalid_argument("config: hidden layer count must be >= 0");
  if (weight_decay < 0.0) throw std::invalid_argument("config: weight decay must be >= 0");
}

MlpModel init_mlp(int input_dim, int num_classes, const TrainConfig& config) {
  if (input_dim < 1 || num_classes < 1) throw std::invalid_argument("init_mlp: bad dimensions");
  MlpModel m;
  m.input_dim = input_dim;
  m.num_classes = num_classes;
  m.hidden_size = config.hidden_size;
  m.num_hidden = config.num_hidden;
  m.dropout = config.dropout;

  RngStream rng(derive_seed(config.seed, {stream::kWeightInit}));
  int in_dim = input_dim;
  for (int l = 0; l <= config.num_hidden; ++l) {
    const int out_dim = l < config.num_hidden ? config.hidden_size : num_classes;
    DenseMatrix w(in_dim, out_dim);
    const double limit = std::sqrt(6.0 / (in_dim + out_dim));
    for (double& v : w.values()) v = (2.0 * rng.next_unit() - 1.0) * limit;
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(static_cast<size_t>(out_dim), 0.0);
    in_dim = out_dim;
  }
  return m;
}

namespace {

struct ForwardTrace {
  std::vector<DenseMatrix> layer_inputs;  // matrix multiplied by W at each layer
  std::vector<DenseMatrix> pre_act;       // Z of each hidden layer
  std::vector<std::vector<uint8_t>> drop_mask;
  DenseMatrix logits;
};

void add_bias_rows(DenseMatrix& m, const std::vector<double>& bias) {
  for (int i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (int j = 0; j < m.cols(); ++j) r[static_cast<size_t>(j)] += bias[static_cast<size_t>(j)];
  }
}

ForwardTrace forward_trace(const MlpModel& model, const NormalizedAdjacency* adj,
                           const DenseMatrix& features, bool training, RngStream* dropout_rng) {
  if (features.cols() != model.input_dim)
    throw std::invalid_argument("forward: feature dim " + std::to_string(features.cols()) +
                                " != model input dim " + std::to_string(model.input_dim));
  if (training && model.dropout > 0.0 && dropout_rng == nullptr)
    throw std::invalid_argument("forward: training mode with dropout requires an RNG");

  ForwardTrace t;
  const double keep = 1.0 - model.dropout;
  DenseMatrix h = features;
  for (int l = 0; l < model.num_hidden; ++l) {
    t.layer_inputs.push_back(adj ? spmm(*adj, h) : h);
    DenseMatrix z = matmul(t.layer_inputs.back(), model.weights[static_cast<size_t>(l)]);
    add_bias_rows(z, model.biases[static_cast<size_t>(l)]);
    t.pre_act.push_back(z);
    for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
    if (training && model.dropout > 0.0) {
      std::vector<uint8_t> mask(z.size());
      auto& vals = z.values();
      for (size_t i = 0; i < vals.size(); ++i) {
        const bool keep_unit = dropout_rng->next_unit() < keep;
        mask[i] = keep_unit;
        vals[i] = keep_unit ? vals[i] / keep : 0.0;
      }
      t.drop_mask.push_back(std::move(mask));
    } else {
      t.drop_mask.emplace_back();
    }
    h = std::move(z);
  }
  t.layer_inputs.push_back(adj ? spmm(*adj, h) : std::move(h));
  t.logits = matmul(t.layer_inputs.back(), model.weights[static_cast<size_t>(model.num_hidden)]);
  add_bias_rows(t.logits, model.biases[static_cast<size_t>(model.num_hidden)]);
  return t;
}

double logsumexp(std::span<const double> row) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : row) s += std::exp(v - mx);
  return mx + std::log(s);
}

std::vector<int> all_rows(int n) {
  std::vector<int> rows(static_cast<size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

DenseMatrix mlp_forward(const MlpModel& model, const DenseMatrix& features, bool training,
                        RngStream* dropout_rng) {
  return forward_trace(model, nullptr, features, training, dropout_rng).logits;
}

DenseMatrix gcn_forward(const MlpModel& model, const NormalizedAdjacency& adj,
                        const DenseMatrix& features, bool training, RngStream* dropout_rng) {
  return forward_trace(model, &adj, features, training, dropout_rng).logits;
}

double cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                     std::span<const int> rows) {
  std::vector<int> fallback;
  if (rows.empty()) {
    fallback = all_rows(logits.rows());
    rows = fallback;
  }
  double total = 0.0;
  for (int r : rows) {
    const auto row = logits.row(r);
    const int y = labels[static_cast<size_t>(r)];
    if (y < 0 || y >= logits.cols()) throw std::invalid_argument("cross_entropy: label out of range");
    total += logsumexp(row) - row[static_cast<size_t>(y)];
  }
  return total / static_cast<double>(rows.size());
}

Gradients network_gradients(const MlpModel& model, const NormalizedAdjacency* adj,
                            const DenseMatrix& features, std::span<const int> labels,
                            std::span<const int> loss_rows, bool training,
                            RngStream* dropout_rng) {
  std::vector<int> fallback;
  if (loss_rows.empty()) {
    fallback = all_rows(features.rows());
    loss_rows = fallback;
  }
  ForwardTrace t = forward_trace(model, adj, features, training, dropout_rng);

  Gradients g;
  g.loss = cross_entropy(t.logits, labels, loss_rows);

  // d loss / d logits: (softmax - onehot) / |loss_rows| on loss rows.
  DenseMatrix delta(t.logits.rows(), t.logits.cols());
  const double inv = 1.0 / static_cast<double>(loss_rows.size());
  for (int r : loss_rows) {
    const auto lrow = t.logits.row(r);
    auto drow = delta.row(r);
    const double lse = logsumexp(lrow);
    for (int c = 0; c < t.logits.cols(); ++c)
      drow[static_cast<size_t>(c)] = std::exp(lrow[static_cast<size_t>(c)] - lse) * inv;
    drow[static_cast<size_t>(labels[static_cast<size_t>(r)])] -= inv;
  }

  g.weights.resize(model.weights.size());
  g.biases.resize(model.biases.size());
  const double keep = 1.0 - model.dropout;

  for (int l = model.num_hidden; l >= 0; --l) {
    g.weights[static_cast<size_t>(l)] = matmul_at_b(t.layer_inputs[static_cast<size_t>(l)], delta);
    auto& gb = g.biases[static_cast<size_t>(l)];
    gb.assign(static_cast<size_t>(delta.cols()), 0.0);
    for (int i = 0; i < delta.rows(); ++i) {
      const auto r = delta.row(i);
      for (int j = 0; j < delta.cols(); ++j) gb[static_cast<size_t>(j)] += r[static_cast<size_t>(j)];
    }
    if (l == 0) break;

    delta = matmul_a_bt(delta, model.weights[static_cast<size_t>(l)]);
    if (adj) delta = spmm(*adj, delta);  // adjacency is symmetric
    const auto& mask = t.drop_mask[static_cast<size_t>(l - 1)];
    const auto& z = t.pre_act[static_cast<size_t>(l - 1)].values();
    auto& dv = delta.values();
    for (size_t i = 0; i < dv.size(); ++i) {
      if (z[i] <= 0.0) {
        dv[i] = 0.0;
      } else if (!mask.empty()) {
        dv[i] = mask[i] ? dv[i] / keep : 0.0;
      }
    }
  }
  return g;
}

namespace {

/// Adam with decoupled-from-nothing plain L2: grad += weight_decay * param
/// before the moment updates. beta1=0.9, beta2=0.999, eps=1e-8.
class AdamState {
 public:
  explicit AdamState(const MlpModel& model) {
    for (const auto& w : model.weights) {
      m_.emplace_back(w.size(), 0.0);
      v_.emplace_back(w.size(), 0.0);
    }
    for (const auto& b : model.biases) {
      mb_.emplace_back(b.size(), 0.0);
      vb_.emplace_back(b.size(), 0.0);
    }
  }

  void step(MlpModel& model, const Gradients& g, double lr, double weight_decay) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    for (size_t l = 0; l < model.weights.size(); ++l) {
      update(model.weights[l].values(), g.weights[l].values(), m_[l], v_[l], lr, weight_decay, bc1, bc2);
      update(model.biases[l], g.biases[l], mb_[l], vb_[l], lr, weight_decay, bc1, bc2);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  static void update(std::vector<double>& param, const std::vector<double>& grad,
                     std::vector<double>& m, std::vector<double>& v, double lr, double wd,
                     double bc1, double bc2) {
    for (size_t i = 0; i < param.size(); ++i) {
      const double gi = grad[i] + wd * param[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
      param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
    }
  }

  int t_ = 0;
  std::vector<std::vector<double>> m_, v_, mb_, vb_;
};

struct TrainProblem {
  const NormalizedAdjacency* adj = nullptr;
  const DenseMatrix* features = nullptr;
  std::span<const int> labels;
  std::span<const int> loss_rows;  // empty = all rows
  // Validation view: a separate matrix (MLP) or rows of the main one (GCN).
  const DenseMatrix* val_features = nullptr;
  std::span<const int> val_labels;
  std::span<const int> val_rows;  // rows of the forwarded validation matrix
};

MlpModel train_network(const TrainProblem& p, int num_classes, const TrainConfig& config) {
  config.validate();
  const bool has_validation = !p.val_labels.empty();

  MlpModel model = init_mlp(p.features->cols(), num_classes, config);
  AdamState adam(model);
  RngStream dropout_rng(derive_seed(config.seed, {stream::kDropout}));

  MlpModel best = model;
  double best_score = -std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Gradients g = network_gradients(model, p.adj, *p.features, p.labels, p.loss_rows,
                                    /*training=*/true, &dropout_rng);
    if (!std::isfinite(g.loss))
      throw std::runtime_error("training diverged: non-finite loss at epoch " +
                               std::to_string(epoch));
    adam.step(model, g, config.learning_rate, config.weight_decay);

    double score;
    if (has_validation) {
      const DenseMatrix& vf = p.val_features ? *p.val_features : *p.features;
      const DenseMatrix logits = forward_trace(model, p.adj, vf, false, nullptr).logits;
      if (config.snapshot_rule == SnapshotRule::best_validation_f1) {
        std::vector<int> pred = argmax_rows(logits);
        if (p.val_rows.empty()) {
          score = micro_f1(pred, p.val_labels, num_classes);
        } else {
          std::vector<int> pv, tv;
          pv.reserve(p.val_rows.size());
          tv.reserve(p.val_rows.size());
          for (int r : p.val_rows) {
            pv.push_back(pred[static_cast<size_t>(r)]);
            tv.push_back(p.val_labels[static_cast<size_t>(r)]);
          }
          score = micro_f1(pv, tv, num_classes);
        }
      } else {
        score = -cross_entropy(logits, p.val_labels, p.val_rows);
      }
    } else {
      // No validation set: keep the snapshot with the lowest training loss,
      // measured deterministically (no dropout) on the updated parameters.
      const DenseMatrix logits = forward_trace(model, p.adj, *p.features, false, nullptr).logits;
      score = -cross_entropy(logits, p.labels, p.loss_rows);
    }
    if (score > best_score) {
      best_score = score;
      best = model;
    }
  }
  return best;
}

}  // namespace

MlpModel train_mlp(const DenseMatrix& features, std::span<const int> labels,
                   const DenseMatrix& val_features, std::span<const int> val_labels,
                   int num_classes, const TrainConfig& config) {
  if (features.rows() < 1) throw std::invalid_argument("train_mlp: no training rows");
  if (static_cast<int>(labels.size()) != features.rows())
    throw std::invalid_argument("train_mlp: labels length != feature rows");
  if (static_cast<int>(val_labels.size()) != val_features.rows())
    throw std::invalid_argument("train_mlp: validation labels length != rows");
  TrainProblem p;
  p.features = &features;
  p.labels = labels;
  p.val_features = &val_features;
  p.val_labels = val_labels;
  return train_network(p, num_classes, config);
}

MlpModel train_gcn(const DenseMatrix& features, std::span<const int> labels,
                   std::span<const int> train_rows, std::span<const int> val_rows,
                   int num_classes, const NormalizedAdjacency& adj, const TrainConfig& config) {
  if (train_rows.empty()) throw std::invalid_argument("train_gcn: no training rows");
  TrainProblem p;
  p.adj = &adj;
  p.features = &features;
  p.labels = labels;
  p.loss_rows = train_rows;
  p.val_labels = val_rows.empty() ? std::span<const int>{} : labels;
  p.val_rows = val_rows;
  return train_network(p, num_classes, config);
}

}  // namespace lpgnet
