#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lpgnet/graph.hpp"
#include "lpgnet/matrix.hpp"
#include "lpgnet/rng.hpp"

namespace lpgnet {

enum class AdjNorm { first_order_gcn, aug_norm_adj };

std::string to_string(AdjNorm mode);
AdjNorm adj_norm_from_string(const std::string& name);

/// Sparse symmetric N x N matrix in CSR with values.
///   first_order_gcn: I + D^{-1/2} A D^{-1/2}
///   aug_norm_adj:    (D+I)^{-1/2} A (D+I)^{-1/2}
/// Degree-0 nodes contribute zero off-diagonal (and the identity diagonal
/// under first_order_gcn).
struct NormalizedAdjacency {
  AdjNorm mode = AdjNorm::aug_norm_adj;
  int n = 0;
  std::vector<int64_t> row_offsets{0};
  std::vector<int> col_indices;
  std::vector<double> values;
};

NormalizedAdjacency normalize_adjacency(const Graph& graph, AdjNorm mode);

/// Identity matrix in the same sparse shape (reduces GCN to MLP exactly).
NormalizedAdjacency identity_adjacency(int n);

/// Sparse * dense.
DenseMatrix spmm(const NormalizedAdjacency& a, const DenseMatrix& x);

/// Fully-connected network: `num_hidden` ReLU+dropout hidden layers of
/// width `hidden_size`, then a linear output layer to `num_classes` logits.
/// The same weight chain drives both the MLP and the GCN forward pass (the
/// GCN multiplies each layer input by a normalized adjacency first).
struct MlpModel {
  std::vector<DenseMatrix> weights;            // num_hidden + 1 matrices
  std::vector<std::vector<double>> biases;
  int input_dim = 0;
  int num_classes = 0;
  int hidden_size = 0;
  int num_hidden = 0;
  double dropout = 0.0;

  bool operator==(const MlpModel&) const = default;
};

/// How the per-epoch snapshot is selected.
enum class SnapshotRule { best_validation_f1, best_validation_loss };

struct TrainConfig {
  double learning_rate = 0.01;
  double dropout = 0.1;
  int hidden_size = 16;
  int num_hidden = 2;
  int epochs = 500;
  double weight_decay = 5e-4;
  uint64_t seed = 1;
  SnapshotRule snapshot_rule = SnapshotRule::best_validation_f1;

  void validate() const;
};

/// Glorot-uniform weights, zero biases, drawn from the kWeightInit stream
/// of config.seed.
MlpModel init_mlp(int input_dim, int num_classes, const TrainConfig& config);

/// Forward pass. With training=true, inverted dropout masks are drawn from
/// `dropout_rng` (required); evaluation mode is deterministic and consumes
/// no randomness.
DenseMatrix mlp_forward(const MlpModel& model, const DenseMatrix& features, bool training,
                        RngStream* dropout_rng = nullptr);

/// GCN forward with the same weight chain: every layer input is multiplied
/// by the normalized adjacency before the dense multiply.
DenseMatrix gcn_forward(const MlpModel& model, const NormalizedAdjacency& adj,
                        const DenseMatrix& features, bool training,
                        RngStream* dropout_rng = nullptr);

/// Mean cross-entropy of `logits` rows listed in `rows` (all rows if empty).
double cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                     std::span<const int> rows = {});

/// Loss plus analytic gradients for every parameter; used by the trainer
/// and pinned against finite differences in the test suite. Dropout is the
/// caller's concern (pass training=false masks by omitting the rng).
struct Gradients {
  std::vector<DenseMatrix> weights;
  std::vector<std::vector<double>> biases;
  double loss = 0.0;
};

Gradients network_gradients(const MlpModel& model, const NormalizedAdjacency* adj,
                            const DenseMatrix& features, std::span<const int> labels,
                            std::span<const int> loss_rows, bool training,
                            RngStream* dropout_rng);

/// Full-batch training of an MLP on `features`/`labels`, selecting the
/// per-epoch snapshot by validation micro-F1 (ties to the earliest epoch).
/// With an empty validation set the snapshot with the lowest training loss
/// is returned instead. Throws on a non-finite loss.
MlpModel train_mlp(const DenseMatrix& features, std::span<const int> labels,
                   const DenseMatrix& val_features, std::span<const int> val_labels,
                   int num_classes, const TrainConfig& config);

/// Semi-supervised full-graph training: forward over every node, loss on
/// the train split only, snapshot selection on the validation split.
MlpModel train_gcn(const DenseMatrix& features, std::span<const int> labels,
                   std::span<const int> train_rows, std::span<const int> val_rows,
                   int num_classes, const NormalizedAdjacency& adj, const TrainConfig& config);

}  // namespace lpgnet
