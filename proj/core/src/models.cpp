#include "lpgnet/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace lpgnet {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::mlp: return "mlp";
    case ModelKind::gcn: return "gcn";
    case ModelKind::dpgcn: return "dpgcn";
    case ModelKind::lpgnet: return "lpgnet";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "mlp") return ModelKind::mlp;
  if (name == "gcn") return ModelKind::gcn;
  if (name == "dpgcn") return ModelKind::dpgcn;
  if (name == "lpgnet") return ModelKind::lpgnet;
  throw std::invalid_argument("unknown model kind \"" + name + "\"");
}

DegreeVectorMatrix find_degree_vec(const Graph& graph, std::span<const int> labels,
                                   int num_classes, double eps, RngStream& rng,
                                   BudgetLedger* ledger, Phase phase, int layer) {
  const int n = graph.num_nodes();
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("find_degree_vec: labels length != num_nodes");
  for (int y : labels)
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("find_degree_vec: label out of range");
  const bool noisy = std::isfinite(eps);
  if (noisy && eps <= 0.0) throw std::invalid_argument("find_degree_vec: eps must be positive");

  DegreeVectorMatrix dv;
  dv.epsilon_used = eps;
  dv.layer = layer;
  dv.values = DenseMatrix(n, num_classes);
  for (int v = 0; v < n; ++v) {
    auto row = dv.values.row(v);
    for (int u : graph.neighbors(v)) row[static_cast<size_t>(labels[static_cast<size_t>(u)])] += 1.0;
  }
  if (noisy) {
    // Sensitivity 2: one edge toggles one count for each endpoint.
    const double scale = 2.0 / eps;
    const uint64_t key = rng.next_u64();
    auto& vals = dv.values.values();
    for (size_t i = 0; i < vals.size(); ++i)
      vals[i] += laplace_from_uniform(unit_at(key, static_cast<uint64_t>(i)), scale);
    if (ledger) ledger->charge(phase, layer, eps);
  }
  return dv;
}

namespace {

// Strict-upper-triangle linear index of (u, v), u < v, row-major.
int64_t row_start(int u, int n) {
  return static_cast<int64_t>(u) * n - static_cast<int64_t>(u) * (u + 1) / 2 - u - 1;
}

}  // namespace

PerturbedAdjacency dpgcn_perturb(const Graph& graph, double eps, double eps_r, RngStream& rng) {
  if (!(eps_r > 0.0) || !(eps_r < eps) || !std::isfinite(eps))
    throw std::invalid_argument("dpgcn_perturb: need 0 < eps_r < eps < infinity");
  const int n = graph.num_nodes();
  const int64_t max_edges = static_cast<int64_t>(n) * (n - 1) / 2;

  const uint64_t base = rng.next_u64();
  RngStream count_rng(derive_seed(base, {stream::kEdgeCountNoise}));
  const uint64_t matrix_key = derive_seed(base, {stream::kAdjacencyNoise});

  const double raw = static_cast<double>(graph.num_edges()) +
                     laplace_sample(1.0 / eps_r, count_rng);
  int64_t selected = static_cast<int64_t>(std::floor(raw));
  selected = std::clamp<int64_t>(selected, 0, max_edges);

  // Noisy strict upper triangle, one Laplace draw per entry.
  const double scale = 1.0 / (eps - eps_r);
  std::vector<double> noisy(static_cast<size_t>(max_edges));
  {
    int64_t p = 0;
    for (int u = 0; u < n; ++u) {
      const auto nb = graph.neighbors(u);
      size_t k = 0;
      while (k < nb.size() && nb[k] <= u) ++k;
      for (int v = u + 1; v < n; ++v, ++p) {
        double value = 0.0;
        if (k < nb.size() && nb[k] == v) {
          value = 1.0;
          ++k;
        }
        noisy[static_cast<size_t>(p)] =
            value + laplace_from_uniform(unit_at(matrix_key, static_cast<uint64_t>(p)), scale);
      }
    }
  }

  std::vector<int64_t> order(static_cast<size_t>(max_edges));
  std::iota(order.begin(), order.end(), 0);
  const auto better = [&noisy](int64_t a, int64_t b) {
    const double va = noisy[static_cast<size_t>(a)], vb = noisy[static_cast<size_t>(b)];
    if (va != vb) return va > vb;
    return a < b;  // deterministic tie-break by ascending (row, col)
  };
  if (selected < max_edges)
    std::nth_element(order.begin(), order.begin() + selected, order.end(), better);

  PerturbedAdjacency out;
  out.selected_count = selected;
  out.edges.reserve(static_cast<size_t>(selected));
  int64_t fresh = 0;
  for (int64_t i = 0; i < selected; ++i) {
    const int64_t p = order[static_cast<size_t>(i)];
    // Invert the linear index: find the row whose range contains p.
    int lo = 0, hi = n - 1;
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      if (row_start(mid, n) + mid + 1 <= p) lo = mid;
      else hi = mid - 1;
    }
    const int u = lo;
    const int v = static_cast<int>(p - row_start(u, n));
    out.edges.emplace_back(u, v);
    if (!graph.has_edge(u, v)) ++fresh;
  }
  std::sort(out.edges.begin(), out.edges.end());
  out.noisy_fraction = static_cast<double>(fresh) / static_cast<double>(std::max<int64_t>(selected, 1));
  return out;
}

namespace {

DenseMatrix concat3(const DenseMatrix& logits, const DenseMatrix& degree_vectors,
                    const DenseMatrix* history) {
  DenseMatrix lx = concat_cols(logits, degree_vectors);
  if (history == nullptr) return lx;
  return concat_cols(*history, lx);
}

TrainConfig layer_config(const TrainConfig& base, int layer) {
  TrainConfig cfg = base;
  cfg.seed = derive_seed(base.seed, {stream::kLpgnetLayer, static_cast<uint64_t>(layer)});
  return cfg;
}

TrainedLpgnet train_lpgnet(const Dataset& dataset, const TrainOptions& options,
                           const TrainConfig& config) {
  if (options.nl < 1) throw std::invalid_argument("lpgnet: nl must be >= 1");
  TrainedLpgnet model;
  model.nl = options.nl;
  model.num_classes = dataset.num_classes;
  model.feature_dim = dataset.feature_dim();
  model.seed = config.seed;
  model.plan = plan_budget(options.setting, options.eps, options.nl);
  model.ledger = BudgetLedger(model.plan);

  const auto& y = dataset.labels;
  std::vector<int> y_train, y_val;
  for (int r : dataset.split.train) y_train.push_back(y[static_cast<size_t>(r)]);
  for (int r : dataset.split.validation) y_val.push_back(y[static_cast<size_t>(r)]);

  const bool evolving_validation =
      options.setting == Setting::inductive_evolving && !dataset.split.validation.empty();

  DenseMatrix f = dataset.features;      // F_i over all nodes
  DenseMatrix f_val = dataset.features;  // separate chain only when recomputing

  model.mlps.push_back(train_mlp(take_rows(f, dataset.split.train), y_train,
                                 take_rows(f_val, dataset.split.validation), y_val,
                                 dataset.num_classes, layer_config(config, 0)));

  for (int i = 0; i < options.nl; ++i) {
    const DenseMatrix logits = mlp_forward(model.mlps.back(), f, /*training=*/false);
    const std::vector<int> predicted = argmax_rows(logits);
    RngStream noise_rng(derive_seed(config.seed, {stream::kDegreeNoise,
                                                  static_cast<uint64_t>(Phase::train),
                                                  static_cast<uint64_t>(i)}));
    DegreeVectorMatrix x = find_degree_vec(dataset.graph, predicted, dataset.num_classes,
                                           model.plan.train_per_layer, noise_rng, &model.ledger,
                                           Phase::train, i);
    DenseMatrix next = concat3(logits, x.values, i == 0 ? nullptr : &f);
    if (options.setting == Setting::transductive) model.train_cache.push_back(x.values);

    DenseMatrix next_val;
    if (evolving_validation) {
      // The validation nodes live on the evolving graph, so their degree
      // vectors are recomputed with the validation allocation.
      const DenseMatrix logits_val = mlp_forward(model.mlps.back(), f_val, false);
      const std::vector<int> predicted_val = argmax_rows(logits_val);
      RngStream val_rng(derive_seed(config.seed, {stream::kDegreeNoise,
                                                  static_cast<uint64_t>(Phase::validation),
                                                  static_cast<uint64_t>(i)}));
      DegreeVectorMatrix x_val =
          find_degree_vec(dataset.graph, predicted_val, dataset.num_classes,
                          model.plan.validation_per_layer, val_rng, &model.ledger,
                          Phase::validation, i);
      next_val = concat3(logits_val, x_val.values, i == 0 ? nullptr : &f_val);
    } else {
      next_val = next;
    }

    f = std::move(next);
    f_val = std::move(next_val);
    model.mlps.push_back(train_mlp(take_rows(f, dataset.split.train), y_train,
                                   take_rows(f_val, dataset.split.validation), y_val,
                                   dataset.num_classes, layer_config(config, i + 1)));
  }
  return model;
}

}  // namespace

TrainedModel train_model(ModelKind kind, const Dataset& dataset, const TrainOptions& options,
                         const TrainConfig& config) {
  config.validate();
  TrainedModel out;
  out.kind = kind;
  out.config = config;

  const auto& y = dataset.labels;
  std::vector<int> y_train, y_val;
  for (int r : dataset.split.train) y_train.push_back(y[static_cast<size_t>(r)]);
  for (int r : dataset.split.validation) y_val.push_back(y[static_cast<size_t>(r)]);

  switch (kind) {
    case ModelKind::mlp: {
      // Uses no edges at all; the budget stays untouched.
      out.plan = plan_budget(options.setting, kInfiniteEpsilon, std::max(options.nl, 1));
      out.ledger = BudgetLedger(out.plan);
      out.impl = train_mlp(take_rows(dataset.features, dataset.split.train), y_train,
                           take_rows(dataset.features, dataset.split.validation), y_val,
                           dataset.num_classes, config);
      break;
    }
    case ModelKind::gcn:
    case ModelKind::dpgcn: {
      const bool apply_dp = kind == ModelKind::dpgcn && std::isfinite(options.eps);
      out.plan = plan_budget(options.setting, apply_dp ? options.eps : kInfiniteEpsilon, 1);
      out.ledger = BudgetLedger(out.plan);
      GcnTrained g;
      g.norm_mode = options.norm_mode;
      Graph released;
      const Graph* train_graph = &dataset.graph;
      if (apply_dp) {
        g.dp = true;
        g.eps_r = options.eps_r;
        RngStream perturb_rng(derive_seed(config.seed, {stream::kAdjacencyNoise}));
        PerturbedAdjacency pa = dpgcn_perturb(dataset.graph, options.eps, options.eps_r, perturb_rng);
        g.noisy_fraction = pa.noisy_fraction;
        g.released_edges = pa.edges;
        // One composite release covers both the edge count and the matrix.
        out.ledger.charge(Phase::train, 0, options.eps, /*override_allocation=*/true);
        released = Graph::from_edges(dataset.num_nodes(), g.released_edges);
        train_graph = &released;
      }
      const NormalizedAdjacency adj = normalize_adjacency(*train_graph, options.norm_mode);
      g.net = train_gcn(dataset.features, dataset.labels, dataset.split.train,
                        dataset.split.validation, dataset.num_classes, adj, config);
      out.impl = std::move(g);
      break;
    }
    case ModelKind::lpgnet: {
      TrainedLpgnet m = train_lpgnet(dataset, options, config);
      out.plan = m.plan;
      out.impl = std::move(m);
      out.ledger = std::get<TrainedLpgnet>(out.impl).ledger;
      break;
    }
  }
  return out;
}

DenseMatrix lpgnet_infer(TrainedLpgnet& model, const Graph& inference_graph,
                         const DenseMatrix& features) {
  if (features.cols() != model.feature_dim)
    throw std::invalid_argument("lpgnet_infer: feature dim mismatch");
  const bool transductive = model.plan.setting == Setting::transductive;
  if (transductive && static_cast<int>(model.train_cache.size()) != model.nl)
    throw std::runtime_error("lpgnet_infer: transductive mode requires the stored training-time "
                             "degree vectors; none are cached");

  DenseMatrix f = features;
  for (int i = 0; i < model.nl; ++i) {
    const DenseMatrix logits = mlp_forward(model.mlps[static_cast<size_t>(i)], f, false);
    const DenseMatrix* x = nullptr;
    if (transductive) {
      x = &model.train_cache[static_cast<size_t>(i)];
    } else if (static_cast<int>(model.inference_cache.size()) > i) {
      x = &model.inference_cache[static_cast<size_t>(i)];
    } else {
      const std::vector<int> predicted = argmax_rows(logits);
      RngStream noise_rng(derive_seed(model.seed, {stream::kDegreeNoise,
                                                   static_cast<uint64_t>(Phase::inference),
                                                   static_cast<uint64_t>(i)}));
      DegreeVectorMatrix fresh =
          find_degree_vec(inference_graph, predicted, model.num_classes,
                          model.plan.inference_per_layer, noise_rng, &model.ledger,
                          Phase::inference, i);
      model.inference_cache.push_back(std::move(fresh.values));
      x = &model.inference_cache.back();
    }
    if (x->rows() != f.rows())
      throw std::runtime_error("lpgnet_infer: cached degree vectors cover " +
                               std::to_string(x->rows()) + " nodes, features have " +
                               std::to_string(f.rows()));
    f = concat3(logits, *x, i == 0 ? nullptr : &f);
  }
  return mlp_forward(model.mlps[static_cast<size_t>(model.nl)], f, false);
}

DenseMatrix model_logits(TrainedModel& model, const Dataset& dataset) {
  switch (model.kind) {
    case ModelKind::mlp:
      return mlp_forward(model.mlp(), dataset.features, false);
    case ModelKind::gcn:
    case ModelKind::dpgcn: {
      const GcnTrained& g = model.gcn();
      const Graph* graph = &dataset.graph;
      Graph released;
      if (g.dp) {
        released = Graph::from_edges(dataset.num_nodes(), g.released_edges);
        graph = &released;
      }
      const NormalizedAdjacency adj = normalize_adjacency(*graph, g.norm_mode);
      return gcn_forward(g.net, adj, dataset.features, false);
    }
    case ModelKind::lpgnet:
      return lpgnet_infer(model.lpgnet(), dataset.graph, dataset.features);
  }
  throw std::logic_error("model_logits: unreachable");
}

PosteriorOracle make_posterior_oracle(TrainedModel& model, const Dataset& dataset) {
  switch (model.kind) {
    case ModelKind::mlp: {
      auto net = std::make_shared<MlpModel>(model.mlp());
      return [net](const DenseMatrix& features) {
        DenseMatrix p = mlp_forward(*net, features, false);
        softmax_rows(p);
        return p;
      };
    }
    case ModelKind::gcn:
    case ModelKind::dpgcn: {
      const GcnTrained& g = model.gcn();
      auto net = std::make_shared<MlpModel>(g.net);
      Graph graph = g.dp ? Graph::from_edges(dataset.num_nodes(), g.released_edges) : dataset.graph;
      auto adj = std::make_shared<NormalizedAdjacency>(normalize_adjacency(graph, g.norm_mode));
      return [net, adj](const DenseMatrix& features) {
        DenseMatrix p = gcn_forward(*net, *adj, features, false);
        softmax_rows(p);
        return p;
      };
    }
    case ModelKind::lpgnet: {
      TrainedLpgnet& m = model.lpgnet();
      if (m.plan.setting != Setting::transductive &&
          static_cast<int>(m.inference_cache.size()) != m.nl) {
        // First inference populates (and charges) the cache; queries after
        // that are pure post-processing.
        lpgnet_infer(m, dataset.graph, dataset.features);
      }
      auto snapshot = std::make_shared<TrainedLpgnet>(m);
      return [snapshot](const DenseMatrix& features) {
        const auto& cache = snapshot->plan.setting == Setting::transductive
                                ? snapshot->train_cache
                                : snapshot->inference_cache;
        DenseMatrix f = features;
        for (int i = 0; i < snapshot->nl; ++i) {
          const DenseMatrix logits = mlp_forward(snapshot->mlps[static_cast<size_t>(i)], f, false);
          f = concat3(logits, cache[static_cast<size_t>(i)], i == 0 ? nullptr : &f);
        }
        DenseMatrix p = mlp_forward(snapshot->mlps[static_cast<size_t>(snapshot->nl)], f, false);
        softmax_rows(p);
        return p;
      };
    }
  }
  throw std::logic_error("make_posterior_oracle: unreachable");
}

}  // namespace lpgnet
