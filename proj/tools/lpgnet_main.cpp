// Command-line front end: generate | train | infer | attack | experiment | stats.
// Every subcommand is deterministic given --seed and its config, and every
// run writes its resolved configuration next to its outputs.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpgnet/attacks.hpp"
#include "lpgnet/dataset.hpp"
#include "lpgnet/experiment.hpp"
#include "lpgnet/metrics.hpp"
#include "lpgnet/models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lpgnet;

namespace {

double parse_eps(const std::string& text) {
  if (text == "inf") return kInfiniteEpsilon;
  size_t consumed = 0;
  const double value = std::stod(text, &consumed);
  if (consumed != text.size() || !(value > 0.0))
    throw CLI::ValidationError("--eps", "expected a positive number or \"inf\"");
  return value;
}

// The only environment override: the root that relative --out paths resolve
// against.
fs::path resolve_out(const std::string& out) {
  fs::path path(out);
  if (path.is_relative()) {
    if (const char* root = std::getenv("LPGNET_OUTPUT_ROOT")) path = fs::path(root) / path;
  }
  return path;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Dataset load_dataset_dir(const std::string& dir) {
  const fs::path p(dir);
  return load_dataset(p / "graph.txt", p / "features.txt", p / "labels.txt", p / "split.txt");
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct TrainCli {
  std::string model = "mlp";
  std::string data;
  std::string setting = "transductive";
  std::string eps = "inf";
  int nl = 1;
  double eps_r = 0.01;
  std::string normalization = "aug_norm_adj";
  std::string out;
  double lr = 0.01;
  double dropout = 0.1;
  int hidden_size = 16;
  int hidden_layers = 2;
  int epochs = 500;
  double weight_decay = 5e-4;
  uint64_t seed = 1;
  std::string snapshot = "validation_f1";
};

TrainConfig to_train_config(const TrainCli& cli) {
  TrainConfig cfg;
  cfg.learning_rate = cli.lr;
  cfg.dropout = cli.dropout;
  cfg.hidden_size = cli.hidden_size;
  cfg.num_hidden = cli.hidden_layers;
  cfg.epochs = cli.epochs;
  cfg.weight_decay = cli.weight_decay;
  cfg.seed = cli.seed;
  cfg.snapshot_rule = cli.snapshot == "validation_loss" ? SnapshotRule::best_validation_loss
                                                        : SnapshotRule::best_validation_f1;
  return cfg;
}

int cmd_generate(const std::string& kind, const BipartiteParams& bp, int er_nodes,
                 int64_t er_edges, int er_classes, uint64_t seed, const std::string& out) {
  const fs::path dir = resolve_out(out);
  Dataset dataset;
  json resolved;
  if (kind == "bipartite") {
    dataset = generate_bipartite(bp, seed);
    resolved = {{"kind", "bipartite"}, {"n1", bp.n1},       {"n2", bp.n2},
                {"p_edge", bp.p_edge}, {"flip1", bp.flip1}, {"flip2", bp.flip2},
                {"seed", seed}};
  } else {
    dataset = generate_erdos_renyi(er_nodes, er_edges, er_classes, seed);
    resolved = {{"kind", "erdos_renyi"},
                {"nodes", er_nodes},
                {"edges", er_edges},
                {"classes", er_classes},
                {"seed", seed}};
  }
  save_dataset(dataset, dir);
  write_text(dir / "generate_config.json", resolved.dump(2) + "\n");
  const GraphStats s = graph_stats(dataset.graph);
  std::cout << "generated " << kind << ": nodes=" << s.nodes << " edges=" << s.edges
            << " density=" << s.density << " -> " << dir.string() << "\n";
  return 0;
}

int cmd_train(const TrainCli& cli) {
  const Dataset dataset = load_dataset_dir(cli.data);
  TrainOptions options;
  options.setting = setting_from_string(cli.setting);
  options.eps = parse_eps(cli.eps);
  options.nl = cli.nl;
  options.eps_r = cli.eps_r;
  options.norm_mode = adj_norm_from_string(cli.normalization);
  const TrainConfig cfg = to_train_config(cli);

  TrainedModel model = train_model(model_kind_from_string(cli.model), dataset, options, cfg);

  const fs::path dir = resolve_out(cli.out);
  json resolved = {{"model", cli.model},           {"data", cli.data},
                   {"setting", cli.setting},       {"eps", cli.eps},
                   {"nl", cli.nl},                 {"eps_r", cli.eps_r},
                   {"normalization", cli.normalization},
                   {"learning_rate", cli.lr},      {"dropout", cli.dropout},
                   {"hidden_size", cli.hidden_size}, {"hidden_layers", cli.hidden_layers},
                   {"epochs", cli.epochs},         {"weight_decay", cli.weight_decay},
                   {"seed", cli.seed},             {"snapshot", cli.snapshot}};
  write_text(dir / "train_config.json", resolved.dump(2) + "\n");

  const DenseMatrix logits = model_logits(model, dataset);
  const std::vector<int> predicted = argmax_rows(logits);
  std::vector<int> pred_test, true_test;
  for (int r : dataset.split.test) {
    pred_test.push_back(predicted[static_cast<size_t>(r)]);
    true_test.push_back(dataset.labels[static_cast<size_t>(r)]);
  }
  const double f1 = micro_f1(pred_test, true_test, dataset.num_classes);
  // Saved after the evaluation pass: in inductive settings that pass is the
  // first inference, which spends budget and fills the cache.
  save_model(model, dir);
  std::cout << "trained " << cli.model << " (eps=" << cli.eps << "): test micro-F1 "
            << format_value(f1) << "; checkpoint -> " << dir.string() << "\n";
  std::cout << "ledger: training_pool=" << model.budget().pool_total(BudgetPool::training_graph)
            << " inference_pool=" << model.budget().pool_total(BudgetPool::inference_graph)
            << "\n";
  return 0;
}

int cmd_infer(const std::string& checkpoint, const std::string& data, const std::string& out) {
  const Dataset dataset = load_dataset_dir(data);
  TrainedModel model = load_model(checkpoint);
  const DenseMatrix logits = model_logits(model, dataset);

  const fs::path dir = resolve_out(out);
  fs::create_directories(dir);
  std::string csv = "node";
  for (int c = 0; c < logits.cols(); ++c) csv += ",logit_" + std::to_string(c);
  csv += '\n';
  for (int v = 0; v < logits.rows(); ++v) {
    csv += std::to_string(v);
    for (double x : logits.row(v)) csv += ',' + format_value(x);
    csv += '\n';
  }
  write_text(dir / "logits.csv", csv);
  std::string preds;
  for (int y : argmax_rows(logits)) preds += std::to_string(y) + '\n';
  write_text(dir / "predictions.txt", preds);
  // Inductive first inference spends budget and fills the cache; persist
  // both so a second run is a cache hit.
  save_model(model, checkpoint);
  std::cout << "inference logits -> " << (dir / "logits.csv").string() << "\n";
  return 0;
}

int cmd_attack(const std::string& checkpoint, const std::string& data,
               const std::string& attacks_csv, int pairs_k, int seeds, uint64_t seed,
               double delta, const std::string& lpa_metric_name, const std::string& band_name,
               int band_size, const std::string& pair_mode, const std::string& out) {
  const Dataset dataset = load_dataset_dir(data);
  TrainedModel model = load_model(checkpoint);

  std::vector<AttackKind> attacks;
  {
    std::string token;
    std::istringstream ss(attacks_csv);
    while (std::getline(ss, token, ',')) attacks.push_back(attack_from_string(token));
  }
  if (attacks.empty()) throw CLI::ValidationError("--attacks", "no attacks given");
  const SimilarityMetric lpa_metric = similarity_from_string(lpa_metric_name);

  PairSampleOptions base_pair_options;
  base_pair_options.k = pairs_k;
  base_pair_options.band_size = band_size;
  if (band_name == "low") base_pair_options.band = DegreeBand::low;
  else if (band_name == "high") base_pair_options.band = DegreeBand::high;
  else if (band_name != "all") throw CLI::ValidationError("--band", "expected all | low | high");
  if (pair_mode == "inductive") base_pair_options.mode = PairMode::inductive_subgraph;
  else if (pair_mode != "transductive")
    throw CLI::ValidationError("--pair-mode", "expected transductive | inductive");
  // Degree bands rank the held-out test nodes.
  if (base_pair_options.band != DegreeBand::all)
    base_pair_options.candidate_nodes = dataset.split.test;

  const PosteriorOracle oracle = make_posterior_oracle(model, dataset);
  const DenseMatrix posteriors = oracle(dataset.features);
  save_model(model, checkpoint);  // oracle setup may have spent inference budget

  const fs::path dir = resolve_out(out);
  fs::create_directories(dir);
  std::string summary_csv = "attack,seed,auc\n";
  json summary = json::array();
  for (size_t ai = 0; ai < attacks.size(); ++ai) {
    for (int s = 0; s < seeds; ++s) {
      const PairSampleOptions& options = base_pair_options;
      const uint64_t pair_seed = derive_seed(
          seed, {stream::kAttackCell, static_cast<uint64_t>(ai), static_cast<uint64_t>(s)});
      const EvalPairs pairs = sample_eval_pairs(dataset.graph, options, pair_seed);
      const AttackResult r = attacks[ai] == AttackKind::lpa
                                 ? lpa_scores(posteriors, pairs, lpa_metric)
                                 : linkteller_scores(oracle, dataset.features, pairs, delta);

      std::string scores = "u,v,is_edge,score\n";
      for (size_t i = 0; i < pairs.positives.size(); ++i)
        scores += std::to_string(pairs.positives[i].first) + ',' +
                  std::to_string(pairs.positives[i].second) + ",1," +
                  format_value(r.positive_scores[i]) + '\n';
      for (size_t i = 0; i < pairs.negatives.size(); ++i)
        scores += std::to_string(pairs.negatives[i].first) + ',' +
                  std::to_string(pairs.negatives[i].second) + ",0," +
                  format_value(r.negative_scores[i]) + '\n';
      const std::string name = to_string(attacks[ai]) + "_seed" + std::to_string(s);
      write_text(dir / ("scores_" + name + ".csv"), scores);
      summary_csv += to_string(attacks[ai]) + ',' + std::to_string(s) + ',' +
                     format_value(r.auc) + '\n';
      summary.push_back({{"attack", to_string(attacks[ai])},
                         {"model", to_string(model.kind)},
                         {"epsilon", format_eps(model.plan.total_epsilon)},
                         {"seed", s},
                         {"auc", r.auc}});
    }
  }
  write_text(dir / "attacks.csv", summary_csv);
  write_text(dir / "attacks_summary.json", summary.dump(2) + "\n");
  std::cout << "attack results -> " << (dir / "attacks.csv").string() << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_override, bool dry_run,
                   int jobs_override) {
  ExperimentConfig config = ExperimentConfig::from_json(read_text(config_path));
  if (jobs_override > 0) config.jobs = jobs_override;

  const json raw = json::parse(read_text(config_path));
  std::string out = out_override;
  if (out.empty() && raw.contains("output")) out = raw.at("output").get<std::string>();
  if (out.empty()) throw CLI::ValidationError("--out", "no output directory configured");
  const fs::path dir = resolve_out(out);

  if (dry_run) {
    std::cout << "experiment plan (hash " << config.hash() << "):\n";
    const Dataset dataset = resolve_dataset(config.dataset);
    const GraphStats s = graph_stats(dataset.graph);
    std::cout << "  dataset: nodes=" << s.nodes << " edges=" << s.edges
              << " density=" << s.density << " classes=" << dataset.num_classes << "\n";
    for (ModelKind m : config.models)
      for (double eps : config.epsilons) {
        const BudgetPlan plan = plan_budget(config.setting, eps, config.nl);
        std::cout << "  cell " << to_string(m) << " eps=" << format_eps(eps) << " x "
                  << config.train_seeds << " train seeds; per-layer budget train="
                  << format_eps(plan.train_per_layer)
                  << " validation=" << format_eps(plan.validation_per_layer)
                  << " inference=" << format_eps(plan.inference_per_layer) << "\n";
      }
    std::cout << "  attacks:";
    for (AttackKind a : config.attacks) std::cout << ' ' << to_string(a);
    std::cout << " (x" << config.attack_seeds << " seeds, " << config.attack_pairs
              << " pairs)\n";
    return 0;
  }

  if (fs::exists(dir / "config.json")) {
    const std::string previous = read_text(dir / "config.json");
    if (previous != config.to_json())
      throw std::runtime_error("output directory " + dir.string() +
                               " holds a different experiment (config hash mismatch); refusing "
                               "to overwrite");
  }

  const Dataset dataset = resolve_dataset(config.dataset);
  const ExperimentReport report = run_experiment(config, dataset);
  write_report(report, dir);
  std::cout << "experiment " << report.config_hash << " -> " << dir.string() << "\n";
  for (const CellAggregate& a : report.aggregates)
    std::cout << "  " << a.model << " eps=" << a.eps << ' ' << a.label << " = " << a.mean
              << " +/- " << a.stddev << " (n=" << a.count << ")\n";
  return 0;
}

int cmd_stats(const std::string& data) {
  const Dataset dataset = load_dataset_dir(data);
  const GraphStats s = graph_stats(dataset.graph);
  std::cout << "nodes " << s.nodes << "\nedges " << s.edges << "\ndensity " << s.density
            << "\nclasses " << dataset.num_classes << "\nfeatures " << dataset.feature_dim()
            << "\n";
  const HomophilyProfile p = homophily_profile(dataset.graph, dataset.labels, dataset.num_classes);
  for (int c = 0; c < dataset.num_classes; ++c)
    std::cout << "avg_homophily[" << c << "] " << p.per_cluster_avg[static_cast<size_t>(c)]
              << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-private graph learning toolkit"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Write synthetic dataset files");
  generate->require_subcommand(1);
  BipartiteParams bp;
  uint64_t gen_seed = 1;
  std::string gen_out = "dataset";
  auto* bipartite = generate->add_subcommand("bipartite", "Two-cluster cross-edge graph");
  bipartite->add_option("--n1", bp.n1, "cluster 1 size");
  bipartite->add_option("--n2", bp.n2, "cluster 2 size");
  bipartite->add_option("--p", bp.p_edge, "cross-pair edge probability");
  bipartite->add_option("--flip1", bp.flip1, "fraction of cluster 1 features flipped");
  bipartite->add_option("--flip2", bp.flip2, "fraction of cluster 2 features flipped");
  bipartite->add_option("--seed", gen_seed, "generator seed");
  bipartite->add_option("--out", gen_out, "output directory")->required();

  int er_nodes = 2708, er_classes = 2;
  int64_t er_edges = 5429;
  auto* erdos = generate->add_subcommand("erdos-renyi", "G(n, m) uniform graph");
  erdos->add_option("--nodes", er_nodes, "node count");
  erdos->add_option("--edges", er_edges, "edge count");
  erdos->add_option("--classes", er_classes, "label count");
  erdos->add_option("--seed", gen_seed, "generator seed");
  erdos->add_option("--out", gen_out, "output directory")->required();

  // train
  TrainCli train_cli;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--model", train_cli.model, "mlp | gcn | dpgcn | lpgnet")->required();
  train->add_option("--data", train_cli.data, "dataset directory")->required();
  train->add_option("--setting", train_cli.setting,
                    "transductive | inductive_different | inductive_evolving");
  train->add_option("--eps", train_cli.eps, "privacy budget (number or \"inf\")");
  train->add_option("--nl", train_cli.nl, "stacked MLP count (lpgnet)");
  train->add_option("--eps-r", train_cli.eps_r, "edge-count budget share (dpgcn)");
  train->add_option("--normalization", train_cli.normalization,
                    "aug_norm_adj | first_order_gcn");
  train->add_option("--out", train_cli.out, "checkpoint directory")->required();
  train->add_option("--lr", train_cli.lr, "learning rate");
  train->add_option("--dropout", train_cli.dropout, "dropout rate");
  train->add_option("--hidden-size", train_cli.hidden_size, "hidden layer width");
  train->add_option("--hidden-layers", train_cli.hidden_layers, "hidden layer count");
  train->add_option("--epochs", train_cli.epochs, "training epochs");
  train->add_option("--weight-decay", train_cli.weight_decay, "L2 weight decay");
  train->add_option("--seed", train_cli.seed, "root seed");
  train->add_option("--snapshot", train_cli.snapshot, "validation_f1 | validation_loss");

  // infer
  std::string infer_checkpoint, infer_data, infer_out = "inference";
  auto* infer = app.add_subcommand("infer", "Release logits for a dataset");
  infer->add_option("--checkpoint", infer_checkpoint, "checkpoint directory")->required();
  infer->add_option("--data", infer_data, "dataset directory")->required();
  infer->add_option("--out", infer_out, "output directory");

  // attack
  std::string atk_checkpoint, atk_data, atk_attacks = "lpa,linkteller", atk_out = "attack";
  std::string atk_metric = "cosine", atk_band = "all", atk_mode = "transductive";
  int atk_pairs = 500, atk_seeds = 5, atk_band_size = 500;
  uint64_t atk_seed = 1;
  double atk_delta = 1e-4;
  auto* attack = app.add_subcommand("attack", "Run link-stealing attacks on a checkpoint");
  attack->add_option("--checkpoint", atk_checkpoint, "checkpoint directory")->required();
  attack->add_option("--data", atk_data, "dataset directory")->required();
  attack->add_option("--attacks", atk_attacks, "comma list: lpa,linkteller");
  attack->add_option("--pairs", atk_pairs, "edges/non-edges per sample");
  attack->add_option("--seeds", atk_seeds, "attack seeds");
  attack->add_option("--seed", atk_seed, "root seed");
  attack->add_option("--delta", atk_delta, "linkteller perturbation");
  attack->add_option("--lpa-metric", atk_metric, "cosine | negative_euclidean | correlation");
  attack->add_option("--band", atk_band, "degree band: all | low | high");
  attack->add_option("--band-size", atk_band_size, "nodes per degree band");
  attack->add_option("--pair-mode", atk_mode, "transductive | inductive");
  attack->add_option("--out", atk_out, "output directory");

  // experiment
  std::string exp_config, exp_out;
  bool exp_dry = false;
  int exp_jobs = 0;
  auto* experiment = app.add_subcommand("experiment", "Run a full experiment config");
  experiment->add_option("--config", exp_config, "experiment JSON config")->required();
  experiment->add_option("--out", exp_out, "report directory (overrides config)");
  experiment->add_flag("--dry-run", exp_dry, "print the resolved plan without training");
  experiment->add_option("--jobs", exp_jobs, "parallel cells (overrides config)");

  // stats
  std::string stats_data;
  auto* stats = app.add_subcommand("stats", "Print dataset statistics");
  stats->add_option("--data", stats_data, "dataset directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (bipartite->parsed())
      return cmd_generate("bipartite", bp, er_nodes, er_edges, er_classes, gen_seed, gen_out);
    if (erdos->parsed())
      return cmd_generate("erdos_renyi", bp, er_nodes, er_edges, er_classes, gen_seed, gen_out);
    if (train->parsed()) return cmd_train(train_cli);
    if (infer->parsed()) return cmd_infer(infer_checkpoint, infer_data, infer_out);
    if (attack->parsed())
      return cmd_attack(atk_checkpoint, atk_data, atk_attacks, atk_pairs, atk_seeds, atk_seed,
                        atk_delta, atk_metric, atk_band, atk_band_size, atk_mode, atk_out);
    if (experiment->parsed()) return cmd_experiment(exp_config, exp_out, exp_dry, exp_jobs);
    if (stats->parsed()) return cmd_stats(stats_data);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
