#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lpgnet/attacks.hpp"
#include "lpgnet/dataset.hpp"
#include "lpgnet/models.hpp"
#include "lpgnet/nn.hpp"

namespace lpgnet {

enum class UtilityMetric { micro_f1, rare_f1 };

std::string to_string(UtilityMetric metric);
UtilityMetric utility_metric_from_string(const std::string& name);

/// Hyperparameter grid, searched exhaustively in the non-DP setting.
/// Candidates enumerate in the order lr -> hidden_size -> hidden_layers ->
/// dropout; ties in validation micro-F1 keep the first candidate.
struct HyperGrid {
  std::vector<double> learning_rate{0.005, 0.001, 0.01, 0.05};
  std::vector<int> hidden_size{16, 64, 256};
  std::vector<int> hidden_layers{2, 3};
  std::vector<double> dropout{0.1, 0.3, 0.5};

  size_t candidate_count() const {
    return learning_rate.size() * hidden_size.size() * hidden_layers.size() * dropout.size();
  }
};

TrainConfig grid_search(const Dataset& dataset, ModelKind kind, const HyperGrid& grid,
                        const TrainOptions& options, const TrainConfig& base, uint64_t seed);

/// Where the experiment's dataset comes from: an on-disk directory or one
/// of the bundled generators.
struct DatasetSpec {
  std::string path;  // directory with graph.txt/features.txt/labels.txt/split.txt
  std::string generate;  // "bipartite" | "erdos_renyi" (ignored when path set)
  BipartiteParams bipartite;
  int er_nodes = 2708;
  int64_t er_edges = 5429;
  int er_classes = 2;
  uint64_t generator_seed = 1;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<ModelKind> models{ModelKind::mlp, ModelKind::gcn};
  Setting setting = Setting::transductive;
  std::vector<double> epsilons{kInfiniteEpsilon};
  int nl = 1;
  TrainConfig train;
  std::optional<HyperGrid> grid;
  std::vector<AttackKind> attacks;
  int attack_pairs = 500;
  double linkteller_delta = 1e-4;
  SimilarityMetric lpa_metric = SimilarityMetric::cosine;
  int train_seeds = 30;
  int attack_seeds = 5;
  uint64_t seed = 1;
  UtilityMetric metric = UtilityMetric::micro_f1;
  AdjNorm normalization = AdjNorm::aug_norm_adj;
  double eps_r = 0.01;
  int jobs = 1;

  void validate() const;
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  /// FNV-1a hash of the canonical JSON form, as 16 hex digits.
  std::string hash() const;
};

struct UtilityRow {
  std::string model, eps;
  int seed;
  std::string metric;
  double value;
};

struct AttackRow {
  std::string model, eps;
  int train_seed;
  std::string attack;
  int attack_seed;
  double auc;
};

struct LedgerRow {
  std::string model, eps;
  int seed;
  double training_pool, inference_pool;
  std::string json;
};

struct HomophilyRow {
  std::string source, model, eps;
  int cluster;
  double value;
};

struct CellAggregate {
  std::string model, eps;
  std::string label;  // metric or attack name
  double mean, stddev;
  int count;
};

struct ExperimentReport {
  std::vector<UtilityRow> utility;
  std::vector<AttackRow> attacks;
  std::vector<LedgerRow> ledgers;
  std::vector<HomophilyRow> homophily;
  std::vector<CellAggregate> aggregates;
  std::string config_json;
  std::string config_hash;
};

/// Trains every (model, epsilon, seed) cell, evaluates utility on the test
/// split, runs the configured attacks against each trained model, and
/// aggregates mean +/- population std. Cells may run in parallel (jobs > 1)
/// with a deterministic ordered merge. Per-seed raw rows are kept so every
/// aggregate can be recomputed from the report.
ExperimentReport run_experiment(const ExperimentConfig& config, const Dataset& dataset);

/// Resolves the config's dataset spec (load or generate).
Dataset resolve_dataset(const DatasetSpec& spec);

/// Writes config.json, utility.csv, attacks.csv, ledger.json, homophily.csv
/// and summary.json into `dir`. Output is byte-identical across reruns of
/// the same config.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

std::string format_eps(double eps);

}  // namespace lpgnet
