#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lpgnet/experiment.hpp"
#include "lpgnet/metrics.hpp"

using namespace lpgnet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.dataset.generate = "bipartite";
  config.dataset.bipartite = {40, 30, 0.2, 0.25, 0.5};
  config.dataset.generator_seed = 3;
  config.models = {ModelKind::mlp, ModelKind::gcn};
  config.epsilons = {kInfiniteEpsilon};
  config.train.epochs = 10;
  config.train_seeds = 1;
  config.attack_seeds = 1;
  config.attacks = {AttackKind::lpa};
  config.attack_pairs = 20;
  config.seed = 5;
  return config;
}

}  // namespace

TEST_CASE("grid search returns the singleton grid unchanged") {
  const Dataset d = generate_bipartite({30, 25, 0.2, 0.25, 0.5}, 2);
  HyperGrid grid;
  grid.learning_rate = {0.01};
  grid.hidden_size = {8};
  grid.hidden_layers = {1};
  grid.dropout = {0.2};
  TrainConfig base;
  base.epochs = 5;
  const TrainConfig best = grid_search(d, ModelKind::mlp, grid, TrainOptions{}, base, 1);
  CHECK(best.learning_rate == 0.01);
  CHECK(best.hidden_size == 8);
  CHECK(best.num_hidden == 1);
  CHECK(best.dropout == 0.2);
}

TEST_CASE("the default grid enumerates the full 72-candidate lattice") {
  CHECK(HyperGrid{}.candidate_count() == 72);
}

TEST_CASE("grid search is deterministic in its seed") {
  const Dataset d = generate_bipartite({30, 25, 0.2, 0.25, 0.5}, 2);
  HyperGrid grid;
  grid.learning_rate = {0.01, 0.05};
  grid.hidden_size = {8};
  grid.hidden_layers = {1, 2};
  grid.dropout = {0.1};
  TrainConfig base;
  base.epochs = 8;
  const TrainConfig a = grid_search(d, ModelKind::mlp, grid, TrainOptions{}, base, 4);
  const TrainConfig b = grid_search(d, ModelKind::mlp, grid, TrainOptions{}, base, 4);
  CHECK(a.learning_rate == b.learning_rate);
  CHECK(a.hidden_size == b.hidden_size);
  CHECK(a.num_hidden == b.num_hidden);
  CHECK(a.dropout == b.dropout);
}

TEST_CASE("run_experiment produces one utility row per cell plus attack rows") {
  const ExperimentConfig config = small_config();
  const Dataset dataset = resolve_dataset(config.dataset);
  const ExperimentReport report = run_experiment(config, dataset);
  CHECK(report.utility.size() == 2);                   // 2 models x 1 eps x 1 seed
  CHECK(report.attacks.size() == 2);                   // 1 attack x 1 seed per cell
  CHECK(report.ledgers.size() == 2);
  CHECK(report.aggregates.size() == 4);                // utility + auc per model
  for (const UtilityRow& row : report.utility) {
    CHECK(row.value >= 0.0);
    CHECK(row.value <= 1.0);
  }
}

TEST_CASE("reports are byte-identical across reruns") {
  const ExperimentConfig config = small_config();
  const Dataset dataset = resolve_dataset(config.dataset);
  const fs::path dir_a = fs::temp_directory_path() / "lpgnet_exp_a";
  const fs::path dir_b = fs::temp_directory_path() / "lpgnet_exp_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  write_report(run_experiment(config, dataset), dir_a);
  write_report(run_experiment(config, dataset), dir_b);
  for (const char* name : {"config.json", "utility.csv", "attacks.csv", "ledger.json",
                           "homophily.csv", "summary.json"}) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    CHECK_FALSE(slurp(dir_a / name).empty());
  }
}

TEST_CASE("parallel cells merge into the same report as sequential execution") {
  ExperimentConfig config = small_config();
  config.train_seeds = 3;
  config.attacks = {};
  const Dataset dataset = resolve_dataset(config.dataset);
  const ExperimentReport sequential = run_experiment(config, dataset);
  config.jobs = 3;
  const ExperimentReport parallel = run_experiment(config, dataset);
  REQUIRE(sequential.utility.size() == parallel.utility.size());
  for (size_t i = 0; i < sequential.utility.size(); ++i) {
    CHECK(sequential.utility[i].model == parallel.utility[i].model);
    CHECK(sequential.utility[i].value == parallel.utility[i].value);
  }
}

TEST_CASE("aggregates recompute exactly from the per-seed rows") {
  ExperimentConfig config = small_config();
  config.train_seeds = 4;
  config.attacks = {};
  config.models = {ModelKind::mlp};
  const Dataset dataset = resolve_dataset(config.dataset);
  const ExperimentReport report = run_experiment(config, dataset);
  REQUIRE(report.utility.size() == 4);
  double mean = 0.0;
  for (const UtilityRow& row : report.utility) mean += row.value;
  mean /= 4.0;
  double var = 0.0;
  for (const UtilityRow& row : report.utility) var += (row.value - mean) * (row.value - mean);
  var /= 4.0;
  REQUIRE(report.aggregates.size() == 1);
  CHECK(report.aggregates[0].mean == doctest::Approx(mean).epsilon(1e-15));
  CHECK(report.aggregates[0].stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
  CHECK(report.aggregates[0].count == 4);
}

TEST_CASE("every DP cell's ledger total equals its epsilon") {
  ExperimentConfig config = small_config();
  config.models = {ModelKind::lpgnet, ModelKind::dpgcn};
  config.epsilons = {1.0, 4.0};
  config.attacks = {};
  config.nl = 2;
  config.train.epochs = 5;
  const Dataset dataset = resolve_dataset(config.dataset);
  const ExperimentReport report = run_experiment(config, dataset);
  REQUIRE(report.ledgers.size() == 4);
  for (const LedgerRow& row : report.ledgers) {
    const double eps = std::stod(row.eps);
    CHECK(std::abs(row.training_pool - eps) <= 1e-12);
  }
}

TEST_CASE("config JSON round trip and stable hashing") {
  ExperimentConfig config = small_config();
  config.epsilons = {kInfiniteEpsilon, 2.0};
  config.grid = HyperGrid{};
  const std::string text = config.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(text);
  CHECK(back.to_json() == text);
  CHECK(back.hash() == config.hash());
  ExperimentConfig other = config;
  other.seed = 999;
  CHECK(other.hash() != config.hash());
}

TEST_CASE("config validation rejects nonsense") {
  ExperimentConfig config = small_config();
  config.epsilons = {-1.0};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = small_config();
  config.train_seeds = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = small_config();
  config.models.clear();
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("dataset spec resolution: generators and paths") {
  DatasetSpec spec;
  spec.generate = "erdos_renyi";
  spec.er_nodes = 50;
  spec.er_edges = 100;
  spec.er_classes = 2;
  spec.generator_seed = 6;
  const Dataset er = resolve_dataset(spec);
  CHECK(er.graph.num_edges() == 100);

  const fs::path dir = fs::temp_directory_path() / "lpgnet_spec_ds";
  fs::remove_all(dir);
  save_dataset(er, dir);
  DatasetSpec by_path;
  by_path.path = dir.string();
  const Dataset loaded = resolve_dataset(by_path);
  CHECK(loaded.graph == er.graph);
}

TEST_CASE("rare_f1 is available as the experiment utility metric") {
  ExperimentConfig config = small_config();
  config.metric = UtilityMetric::rare_f1;
  config.models = {ModelKind::mlp};
  config.attacks = {};
  const Dataset dataset = resolve_dataset(config.dataset);
  const ExperimentReport report = run_experiment(config, dataset);
  CHECK(report.utility[0].metric == "rare_f1");
}
