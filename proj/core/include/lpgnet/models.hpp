#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lpgnet/dataset.hpp"
#include "lpgnet/graph.hpp"
#include "lpgnet/matrix.hpp"
#include "lpgnet/nn.hpp"
#include "lpgnet/privacy.hpp"

namespace lpgnet {

enum class ModelKind { mlp, gcn, dpgcn, lpgnet };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// N x C matrix of per-node neighbor counts per cluster, optionally noised
/// with Laplace(0, 2/eps) per entry. With eps = infinity every entry is an
/// exact count and row v sums to degree(v).
struct DegreeVectorMatrix {
  DenseMatrix values;
  double epsilon_used = kInfiniteEpsilon;
  int layer = 0;
};

/// Cluster degree vectors for every node: entry (v, c) counts the neighbors
/// of v whose label is c, plus independent Laplace(0, 2/eps) noise when eps
/// is finite. Noise draws are counter-based per entry, so the result is
/// independent of iteration order. Charges `ledger` once per call when
/// noise is applied.
DegreeVectorMatrix find_degree_vec(const Graph& graph, std::span<const int> labels,
                                   int num_classes, double eps, RngStream& rng,
                                   BudgetLedger* ledger = nullptr, Phase phase = Phase::train,
                                   int layer = 0);

/// Symmetric 0/1 adjacency release: selected edges plus how many of them
/// were not in the original graph.
struct PerturbedAdjacency {
  std::vector<std::pair<int, int>> edges;  // u < v, lexicographic
  int64_t selected_count = 0;
  double noisy_fraction = 0.0;  // |selected \ original| / max(selected, 1)
};

/// Adjacency release: noisy edge count E~ = floor(|E| + Lap(0, 1/eps_r))
/// clamped to [0, N(N-1)/2], Laplace(0, 1/(eps-eps_r)) on every
/// strict-upper-triangle entry, then the top-E~ noisy entries become edges
/// (ties break by ascending (row, col)). Requires 0 < eps_r < eps.
PerturbedAdjacency dpgcn_perturb(const Graph& graph, double eps, double eps_r, RngStream& rng);

/// Ordered chain of trained MLPs plus the degree-vector caches and budget
/// state. Input dims follow dim(F_0) = F, dim(F_1) = 2C,
/// dim(F_{i+1}) = dim(F_i) + 2C.
struct TrainedLpgnet {
  std::vector<MlpModel> mlps;  // nl + 1 entries
  int nl = 1;
  int num_classes = 0;
  int feature_dim = 0;
  BudgetPlan plan;
  BudgetLedger ledger;
  std::vector<DenseMatrix> train_cache;      // transductive: X_i per layer
  std::vector<DenseMatrix> inference_cache;  // inductive: filled on first inference
  uint64_t seed = 0;
};

struct GcnTrained {
  MlpModel net;
  AdjNorm norm_mode = AdjNorm::aug_norm_adj;
  bool dp = false;
  double eps_r = 0.01;
  std::vector<std::pair<int, int>> released_edges;  // dp only: the posted graph
  double noisy_fraction = 0.0;
};

struct TrainedModel {
  ModelKind kind = ModelKind::mlp;
  std::variant<MlpModel, GcnTrained, TrainedLpgnet> impl;
  BudgetPlan plan;
  BudgetLedger ledger;  // for lpgnet the live ledger sits inside the impl
  TrainConfig config;

  const TrainedLpgnet& lpgnet() const { return std::get<TrainedLpgnet>(impl); }
  TrainedLpgnet& lpgnet() { return std::get<TrainedLpgnet>(impl); }
  const GcnTrained& gcn() const { return std::get<GcnTrained>(impl); }
  const MlpModel& mlp() const { return std::get<MlpModel>(impl); }

  const BudgetLedger& budget() const {
    return kind == ModelKind::lpgnet ? lpgnet().ledger : ledger;
  }
};

struct TrainOptions {
  Setting setting = Setting::transductive;
  double eps = kInfiniteEpsilon;
  int nl = 1;
  double eps_r = 0.01;  // adjacency-release edge-count budget (dpgcn)
  AdjNorm norm_mode = AdjNorm::aug_norm_adj;
};

/// Trains one of the four model kinds on the dataset. The training streams
/// derive from config.seed only, so dpgcn at eps = infinity is bit-identical
/// to gcn with the same seed.
TrainedModel train_model(ModelKind kind, const Dataset& dataset, const TrainOptions& options,
                         const TrainConfig& config);

/// Inference pass releasing only the last MLP's logits. Transductive mode
/// reuses the stored training-time degree vectors (throws if missing) and
/// charges nothing; inductive modes compute degree vectors on the inference
/// graph on the first call, charge the plan's inference allocation per
/// layer, and cache them for later calls.
DenseMatrix lpgnet_infer(TrainedLpgnet& model, const Graph& inference_graph,
                         const DenseMatrix& features);

/// Evaluation-mode logits of any trained model on the dataset's features.
/// For lpgnet this runs lpgnet_infer (populating the inference cache on
/// first use in inductive settings).
DenseMatrix model_logits(TrainedModel& model, const Dataset& dataset);

/// Black-box posterior oracle over a frozen model: feature matrix in, N x C
/// softmax posteriors out. Graph-derived state (normalized adjacency,
/// degree-vector caches) is captured at construction, never recomputed per
/// query. For lpgnet the inference cache must already be populated.
using PosteriorOracle = std::function<DenseMatrix(const DenseMatrix&)>;
PosteriorOracle make_posterior_oracle(TrainedModel& model, const Dataset& dataset);

/// Checkpoint directory: manifest.json, one weight file per MLP, one cache
/// file per stored degree-vector matrix, ledger.json. Round-trips exactly.
void save_model(const TrainedModel& model, const std::filesystem::path& dir);
TrainedModel load_model(const std::filesystem::path& dir);

}  // namespace lpgnet
