#include "lpgnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "lpgnet/metrics.hpp"
#include "lpgnet/rng.hpp"

namespace lpgnet {

using nlohmann::json;

std::string to_string(UtilityMetric metric) {
  return metric == UtilityMetric::micro_f1 ? "micro_f1" : "rare_f1";
}

UtilityMetric utility_metric_from_string(const std::string& name) {
  if (name == "micro_f1") return UtilityMetric::micro_f1;
  if (name == "rare_f1") return UtilityMetric::rare_f1;
  throw std::invalid_argument("unknown utility metric \"" + name + "\"");
}

std::string format_eps(double eps) {
  if (std::isinf(eps)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", eps);
  return buf;
}

namespace {

double evaluate_utility(TrainedModel& model, const Dataset& dataset, UtilityMetric metric) {
  const DenseMatrix logits = model_logits(model, dataset);
  const std::vector<int> predicted = argmax_rows(logits);
  std::vector<int> pred_rows, true_rows;
  for (int r : dataset.split.test) {
    pred_rows.push_back(predicted[static_cast<size_t>(r)]);
    true_rows.push_back(dataset.labels[static_cast<size_t>(r)]);
  }
  if (metric == UtilityMetric::rare_f1) return rare_f1(pred_rows, true_rows);
  return micro_f1(pred_rows, true_rows, dataset.num_classes);
}

double validation_f1(TrainedModel& model, const Dataset& dataset) {
  const DenseMatrix logits = model_logits(model, dataset);
  const std::vector<int> predicted = argmax_rows(logits);
  std::vector<int> pred_rows, true_rows;
  for (int r : dataset.split.validation) {
    pred_rows.push_back(predicted[static_cast<size_t>(r)]);
    true_rows.push_back(dataset.labels[static_cast<size_t>(r)]);
  }
  return micro_f1(pred_rows, true_rows, dataset.num_classes);
}

}  // namespace

TrainConfig grid_search(const Dataset& dataset, ModelKind kind, const HyperGrid& grid,
                        const TrainOptions& options, const TrainConfig& base, uint64_t seed) {
  if (grid.candidate_count() == 0) throw std::invalid_argument("grid_search: empty grid");
  TrainConfig best = base;
  double best_f1 = -1.0;
  TrainOptions non_dp = options;
  non_dp.eps = kInfiniteEpsilon;  // the search runs without noise
  for (double lr : grid.learning_rate)
    for (int hid_s : grid.hidden_size)
      for (int hid_n : grid.hidden_layers)
        for (double dr : grid.dropout) {
          TrainConfig cfg = base;
          cfg.learning_rate = lr;
          cfg.hidden_size = hid_s;
          cfg.num_hidden = hid_n;
          cfg.dropout = dr;
          cfg.seed = derive_seed(seed, {stream::kGridSearch});
          TrainedModel model = train_model(kind, dataset, non_dp, cfg);
          const double f1 = validation_f1(model, dataset);
          if (f1 > best_f1) {
            best_f1 = f1;
            best = cfg;
          }
        }
  best.seed = base.seed;
  return best;
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw std::invalid_argument("experiment: no models configured");
  if (epsilons.empty()) throw std::invalid_argument("experiment: no epsilon values");
  for (double e : epsilons)
    if (!(e > 0.0)) throw std::invalid_argument("experiment: epsilon values must be positive");
  if (train_seeds < 1 || attack_seeds < 1)
    throw std::invalid_argument("experiment: seed counts must be >= 1");
  if (nl < 1) throw std::invalid_argument("experiment: nl must be >= 1");
  if (jobs < 1) throw std::invalid_argument("experiment: jobs must be >= 1");
  train.validate();
}

std::string ExperimentConfig::to_json() const {
  json j;
  if (!dataset.path.empty()) {
    j["dataset"] = {{"path", dataset.path}};
  } else if (dataset.generate == "bipartite") {
    j["dataset"] = {{"generate", "bipartite"},
                    {"n1", dataset.bipartite.n1},
                    {"n2", dataset.bipartite.n2},
                    {"p_edge", dataset.bipartite.p_edge},
                    {"flip1", dataset.bipartite.flip1},
                    {"flip2", dataset.bipartite.flip2},
                    {"seed", dataset.generator_seed}};
  } else {
    j["dataset"] = {{"generate", "erdos_renyi"},
                    {"nodes", dataset.er_nodes},
                    {"edges", dataset.er_edges},
                    {"classes", dataset.er_classes},
                    {"seed", dataset.generator_seed}};
  }
  j["models"] = json::array();
  for (ModelKind m : models) j["models"].push_back(to_string(m));
  j["setting"] = to_string(setting);
  j["epsilons"] = json::array();
  for (double e : epsilons) {
    if (std::isinf(e)) j["epsilons"].push_back("inf");
    else j["epsilons"].push_back(e);
  }
  j["nl"] = nl;
  j["train"] = {{"learning_rate", train.learning_rate}, {"dropout", train.dropout},
                {"hidden_size", train.hidden_size},     {"hidden_layers", train.num_hidden},
                {"epochs", train.epochs},               {"weight_decay", train.weight_decay}};
  if (grid) {
    j["grid"] = {{"learning_rate", grid->learning_rate},
                 {"hidden_size", grid->hidden_size},
                 {"hidden_layers", grid->hidden_layers},
                 {"dropout", grid->dropout}};
  }
  j["attacks"] = json::array();
  for (AttackKind a : attacks) j["attacks"].push_back(to_string(a));
  j["attack_pairs"] = attack_pairs;
  j["linkteller_delta"] = linkteller_delta;
  j["lpa_metric"] = to_string(lpa_metric);
  j["train_seeds"] = train_seeds;
  j["attack_seeds"] = attack_seeds;
  j["seed"] = seed;
  j["metric"] = to_string(metric);
  j["normalization"] = to_string(normalization);
  j["eps_r"] = eps_r;
  j["jobs"] = jobs;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  const json& d = j.at("dataset");
  if (d.contains("path")) {
    c.dataset.path = d.at("path").get<std::string>();
  } else {
    c.dataset.generate = d.at("generate").get<std::string>();
    c.dataset.generator_seed = d.value("seed", static_cast<uint64_t>(1));
    if (c.dataset.generate == "bipartite") {
      c.dataset.bipartite.n1 = d.value("n1", 500);
      c.dataset.bipartite.n2 = d.value("n2", 400);
      c.dataset.bipartite.p_edge = d.value("p_edge", 0.05);
      c.dataset.bipartite.flip1 = d.value("flip1", 0.25);
      c.dataset.bipartite.flip2 = d.value("flip2", 0.625);
    } else if (c.dataset.generate == "erdos_renyi") {
      c.dataset.er_nodes = d.value("nodes", 2708);
      c.dataset.er_edges = d.value("edges", static_cast<int64_t>(5429));
      c.dataset.er_classes = d.value("classes", 2);
    } else {
      throw std::invalid_argument("experiment: unknown generator \"" + c.dataset.generate + "\"");
    }
  }
  c.models.clear();
  for (const auto& m : j.at("models")) c.models.push_back(model_kind_from_string(m.get<std::string>()));
  c.setting = setting_from_string(j.value("setting", std::string("transductive")));
  c.epsilons.clear();
  for (const auto& e : j.at("epsilons")) {
    if (e.is_string()) {
      if (e.get<std::string>() != "inf")
        throw std::invalid_argument("experiment: epsilon string must be \"inf\"");
      c.epsilons.push_back(kInfiniteEpsilon);
    } else {
      c.epsilons.push_back(e.get<double>());
    }
  }
  c.nl = j.value("nl", 1);
  if (j.contains("train")) {
    const json& t = j.at("train");
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.dropout = t.value("dropout", c.train.dropout);
    c.train.hidden_size = t.value("hidden_size", c.train.hidden_size);
    c.train.num_hidden = t.value("hidden_layers", c.train.num_hidden);
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
  }
  if (j.contains("grid")) {
    HyperGrid g;
    const json& gj = j.at("grid");
    g.learning_rate = gj.value("learning_rate", g.learning_rate);
    g.hidden_size = gj.value("hidden_size", g.hidden_size);
    g.hidden_layers = gj.value("hidden_layers", g.hidden_layers);
    g.dropout = gj.value("dropout", g.dropout);
    c.grid = g;
  }
  if (j.contains("attacks"))
    for (const auto& a : j.at("attacks")) c.attacks.push_back(attack_from_string(a.get<std::string>()));
  c.attack_pairs = j.value("attack_pairs", 500);
  c.linkteller_delta = j.value("linkteller_delta", 1e-4);
  if (j.contains("lpa_metric")) c.lpa_metric = similarity_from_string(j.at("lpa_metric").get<std::string>());
  c.train_seeds = j.value("train_seeds", 30);
  c.attack_seeds = j.value("attack_seeds", 5);
  c.seed = j.value("seed", static_cast<uint64_t>(1));
  if (j.contains("metric")) c.metric = utility_metric_from_string(j.at("metric").get<std::string>());
  if (j.contains("normalization"))
    c.normalization = adj_norm_from_string(j.at("normalization").get<std::string>());
  c.eps_r = j.value("eps_r", 0.01);
  c.jobs = j.value("jobs", 1);
  c.validate();
  return c;
}

std::string ExperimentConfig::hash() const {
  const std::string text = to_json();
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset resolve_dataset(const DatasetSpec& spec) {
  if (!spec.path.empty()) {
    const std::filesystem::path dir(spec.path);
    return load_dataset(dir / "graph.txt", dir / "features.txt", dir / "labels.txt",
                        dir / "split.txt");
  }
  if (spec.generate == "bipartite") return generate_bipartite(spec.bipartite, spec.generator_seed);
  if (spec.generate == "erdos_renyi")
    return generate_erdos_renyi(spec.er_nodes, spec.er_edges, spec.er_classes, spec.generator_seed);
  throw std::invalid_argument("dataset spec: neither path nor generator given");
}

namespace {

struct Cell {
  size_t model_idx, eps_idx;
  int seed_idx;
};

struct CellResult {
  UtilityRow utility;
  std::vector<AttackRow> attacks;
  LedgerRow ledger;
  std::vector<HomophilyRow> homophily;  // first seed only
};

CellResult run_cell(const ExperimentConfig& config, const Dataset& dataset, const Cell& cell,
                    const TrainConfig& cell_train) {
  const ModelKind kind = config.models[cell.model_idx];
  const double eps = config.epsilons[cell.eps_idx];
  const std::string model_name = to_string(kind);
  const std::string eps_label = format_eps(eps);

  TrainOptions options;
  options.setting = config.setting;
  options.eps = eps;
  options.nl = config.nl;
  options.eps_r = config.eps_r;
  options.norm_mode = config.normalization;

  TrainConfig cfg = cell_train;
  cfg.seed = derive_seed(config.seed, {stream::kTrainCell, static_cast<uint64_t>(cell.model_idx),
                                       static_cast<uint64_t>(cell.eps_idx),
                                       static_cast<uint64_t>(cell.seed_idx)});

  TrainedModel model = train_model(kind, dataset, options, cfg);
  CellResult result;
  result.utility = {model_name, eps_label, cell.seed_idx, to_string(config.metric),
                    evaluate_utility(model, dataset, config.metric)};

  if (cell.seed_idx == 0) {
    const std::vector<int> predicted = argmax_rows(model_logits(model, dataset));
    const HomophilyProfile profile =
        homophily_profile(dataset.graph, predicted, dataset.num_classes);
    for (int c = 0; c < dataset.num_classes; ++c)
      result.homophily.push_back(
          {"model", model_name, eps_label, c, profile.per_cluster_avg[static_cast<size_t>(c)]});
  }

  if (!config.attacks.empty()) {
    const PosteriorOracle oracle = make_posterior_oracle(model, dataset);
    const DenseMatrix posteriors = oracle(dataset.features);
    for (size_t attack_idx = 0; attack_idx < config.attacks.size(); ++attack_idx) {
      const AttackKind attack = config.attacks[attack_idx];
      for (int aseed = 0; aseed < config.attack_seeds; ++aseed) {
        PairSampleOptions pair_options;
        pair_options.k = config.attack_pairs;
        const uint64_t pair_seed =
            derive_seed(config.seed, {stream::kAttackCell, static_cast<uint64_t>(cell.model_idx),
                                      static_cast<uint64_t>(cell.eps_idx),
                                      static_cast<uint64_t>(cell.seed_idx),
                                      static_cast<uint64_t>(attack_idx),
                                      static_cast<uint64_t>(aseed)});
        const EvalPairs pairs = sample_eval_pairs(dataset.graph, pair_options, pair_seed);
        const AttackResult r =
            attack == AttackKind::lpa
                ? lpa_scores(posteriors, pairs, config.lpa_metric)
                : linkteller_scores(oracle, dataset.features, pairs, config.linkteller_delta);
        result.attacks.push_back({model_name, eps_label, cell.seed_idx, to_string(attack), aseed, r.auc});
      }
    }
  }

  const BudgetLedger& ledger = model.budget();
  result.ledger = {model_name, eps_label, cell.seed_idx,
                   ledger.pool_total(BudgetPool::training_graph),
                   ledger.pool_total(BudgetPool::inference_graph), ledger.to_json()};
  return result;
}

void append_aggregates(ExperimentReport& report, const ExperimentConfig& config) {
  const auto stats = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());  // population std over the declared seeds
    return std::pair{mean, std::sqrt(var)};
  };

  for (size_t m = 0; m < config.models.size(); ++m)
    for (size_t e = 0; e < config.epsilons.size(); ++e) {
      const std::string model_name = to_string(config.models[m]);
      const std::string eps_label = format_eps(config.epsilons[e]);
      std::vector<double> values;
      for (const UtilityRow& row : report.utility)
        if (row.model == model_name && row.eps == eps_label) values.push_back(row.value);
      if (!values.empty()) {
        const auto [mean, sd] = stats(values);
        report.aggregates.push_back({model_name, eps_label, to_string(config.metric), mean, sd,
                                     static_cast<int>(values.size())});
      }
      for (AttackKind attack : config.attacks) {
        std::vector<double> aucs;
        for (const AttackRow& row : report.attacks)
          if (row.model == model_name && row.eps == eps_label && row.attack == to_string(attack))
            aucs.push_back(row.auc);
        if (!aucs.empty()) {
          const auto [mean, sd] = stats(aucs);
          report.aggregates.push_back({model_name, eps_label, "auc_" + to_string(attack), mean, sd,
                                       static_cast<int>(aucs.size())});
        }
      }
    }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  config.validate();
  ExperimentReport report;
  report.config_json = config.to_json();
  report.config_hash = config.hash();

  // Hyperparameters: tuned in the non-DP setting once per model kind; the
  // DP cells reuse the winner.
  std::vector<TrainConfig> per_model_train(config.models.size(), config.train);
  if (config.grid) {
    TrainOptions options;
    options.setting = config.setting;
    options.nl = config.nl;
    options.norm_mode = config.normalization;
    for (size_t m = 0; m < config.models.size(); ++m)
      per_model_train[m] = grid_search(dataset, config.models[m], *config.grid, options,
                                       config.train, derive_seed(config.seed, {stream::kGridSearch,
                                                                               static_cast<uint64_t>(m)}));
  }

  std::vector<Cell> cells;
  for (size_t m = 0; m < config.models.size(); ++m)
    for (size_t e = 0; e < config.epsilons.size(); ++e)
      for (int s = 0; s < config.train_seeds; ++s) cells.push_back({m, e, s});

  const auto run_cell_checked = [&config, &dataset, &per_model_train](const Cell& cell) {
    try {
      return run_cell(config, dataset, cell, per_model_train[cell.model_idx]);
    } catch (const std::exception& ex) {
      throw std::runtime_error("cell model=" + to_string(config.models[cell.model_idx]) +
                               " eps=" + format_eps(config.epsilons[cell.eps_idx]) +
                               " seed=" + std::to_string(cell.seed_idx) + ": " + ex.what());
    }
  };

  std::vector<CellResult> results(cells.size());
  if (config.jobs <= 1) {
    for (size_t i = 0; i < cells.size(); ++i) results[i] = run_cell_checked(cells[i]);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    const int n_workers = std::min<int>(config.jobs, static_cast<int>(cells.size()));
    std::atomic<bool> failed{false};
    std::string error_text;
    std::mutex error_mutex;
    for (int w = 0; w < n_workers; ++w)
      workers.emplace_back([&]() {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= cells.size() || failed.load()) return;
          try {
            results[i] = run_cell_checked(cells[i]);
          } catch (const std::exception& ex) {
            std::lock_guard<std::mutex> lock(error_mutex);
            failed.store(true);
            if (!error_text.empty()) error_text += "; ";
            error_text += ex.what();
          }
        }
      });
    for (auto& t : workers) t.join();
    if (failed.load()) throw std::runtime_error("failed cells: " + error_text);
  }

  // Deterministic ordered merge.
  const HomophilyProfile truth = homophily_profile(dataset.graph, dataset.labels, dataset.num_classes);
  for (int c = 0; c < dataset.num_classes; ++c)
    report.homophily.push_back(
        {"ground_truth", "", "", c, truth.per_cluster_avg[static_cast<size_t>(c)]});
  for (CellResult& r : results) {
    report.utility.push_back(std::move(r.utility));
    for (AttackRow& a : r.attacks) report.attacks.push_back(std::move(a));
    report.ledgers.push_back(std::move(r.ledger));
    for (HomophilyRow& h : r.homophily) report.homophily.push_back(std::move(h));
  }
  append_aggregates(report, config);
  return report;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", report.config_json);

  std::string utility = "model,epsilon,train_seed,metric,value\n";
  for (const UtilityRow& r : report.utility)
    utility += r.model + ',' + r.eps + ',' + std::to_string(r.seed) + ',' + r.metric + ',' +
               format_value(r.value) + '\n';
  write_text(dir / "utility.csv", utility);

  std::string attacks = "model,epsilon,train_seed,attack,attack_seed,auc\n";
  for (const AttackRow& r : report.attacks)
    attacks += r.model + ',' + r.eps + ',' + std::to_string(r.train_seed) + ',' + r.attack + ',' +
               std::to_string(r.attack_seed) + ',' + format_value(r.auc) + '\n';
  write_text(dir / "attacks.csv", attacks);

  std::string homophily = "source,model,epsilon,cluster,avg_homophily\n";
  for (const HomophilyRow& r : report.homophily)
    homophily += r.source + ',' + r.model + ',' + r.eps + ',' + std::to_string(r.cluster) + ',' +
                 format_value(r.value) + '\n';
  write_text(dir / "homophily.csv", homophily);

  json ledgers = json::array();
  for (const LedgerRow& r : report.ledgers)
    ledgers.push_back({{"model", r.model},
                       {"epsilon", r.eps},
                       {"train_seed", r.seed},
                       {"training_pool", r.training_pool},
                       {"inference_pool", r.inference_pool},
                       {"ledger", json::parse(r.json)}});
  write_text(dir / "ledger.json", ledgers.dump(2));

  json summary;
  summary["config_hash"] = report.config_hash;
  summary["aggregates"] = json::array();
  for (const CellAggregate& a : report.aggregates)
    summary["aggregates"].push_back({{"model", a.model},
                                     {"epsilon", a.eps},
                                     {"label", a.label},
                                     {"mean", a.mean},
                                     {"std", a.stddev},
                                     {"count", a.count}});
  write_text(dir / "summary.json", summary.dump(2));
}

}  // namespace lpgnet
