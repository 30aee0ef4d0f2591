#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <vector>

#include "lpgnet/dataset.hpp"
#include "lpgnet/metrics.hpp"
#include "lpgnet/models.hpp"

using namespace lpgnet;
namespace fs = std::filesystem;

namespace {

Graph random_graph(int n, double p, uint64_t seed) {
  RngStream rng(seed);
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.next_unit() < p) edges.emplace_back(u, v);
  return Graph::from_edges(n, std::move(edges));
}

// Independent oracle: double loop over (node, cluster) pairs.
DenseMatrix brute_force_degree_vectors(const Graph& g, std::span<const int> labels, int c) {
  DenseMatrix x(g.num_nodes(), c);
  for (int v = 0; v < g.num_nodes(); ++v)
    for (int cluster = 0; cluster < c; ++cluster) {
      int count = 0;
      for (int u : g.neighbors(v))
        if (labels[static_cast<size_t>(u)] == cluster) ++count;
      x.at(v, cluster) = count;
    }
  return x;
}

std::vector<double> upper_triangle(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<double> tri;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) tri.push_back(g.has_edge(u, v) ? 1.0 : 0.0);
  return tri;
}

Graph toggle_edge(const Graph& g, int u, int v) {
  auto edges = g.edge_list();
  const auto wanted = std::make_pair(std::min(u, v), std::max(u, v));
  const auto it = std::find(edges.begin(), edges.end(), wanted);
  if (it == edges.end()) edges.push_back(wanted);
  else edges.erase(it);
  return Graph::from_edges(g.num_nodes(), std::move(edges));
}

double test_micro_f1(TrainedModel& model, const Dataset& d) {
  const std::vector<int> predicted = argmax_rows(model_logits(model, d));
  std::vector<int> pred, truth;
  for (int r : d.split.test) {
    pred.push_back(predicted[static_cast<size_t>(r)]);
    truth.push_back(d.labels[static_cast<size_t>(r)]);
  }
  return micro_f1(pred, truth, d.num_classes);
}

TrainConfig quick_config(uint64_t seed, int epochs = 60) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.hidden_size = 16;
  cfg.num_hidden = 2;
  cfg.dropout = 0.1;
  return cfg;
}

}  // namespace

TEST_CASE("degree vectors of the triangle with labels 0,0,1") {
  const Graph g = Graph::from_edges(3, {{0, 1}, {0, 2}, {1, 2}});
  const std::vector<int> labels{0, 0, 1};
  RngStream rng(1);
  const DegreeVectorMatrix x = find_degree_vec(g, labels, 2, kInfiniteEpsilon, rng);
  CHECK(x.values.at(0, 0) == 1.0);
  CHECK(x.values.at(0, 1) == 1.0);
  CHECK(x.values.at(1, 0) == 1.0);
  CHECK(x.values.at(1, 1) == 1.0);
  CHECK(x.values.at(2, 0) == 2.0);
  CHECK(x.values.at(2, 1) == 0.0);
}

TEST_CASE("degree vectors: isolated node gets a zero row") {
  const Graph g = Graph::from_edges(3, {{0, 1}});
  const std::vector<int> labels{0, 1, 1};
  RngStream rng(1);
  const DegreeVectorMatrix x = find_degree_vec(g, labels, 2, kInfiniteEpsilon, rng);
  CHECK(x.values.at(2, 0) == 0.0);
  CHECK(x.values.at(2, 1) == 0.0);
}

TEST_CASE("degree-vector noise is centered on the exact counts") {
  const Graph g = Graph::from_edges(3, {{0, 1}, {0, 2}, {1, 2}});
  const std::vector<int> labels{0, 0, 1};
  DenseMatrix sum(3, 2);
  const int repeats = 10000;
  RngStream rng(2024);
  for (int r = 0; r < repeats; ++r) {
    const DegreeVectorMatrix x = find_degree_vec(g, labels, 2, 2.0, rng);
    for (size_t i = 0; i < sum.values().size(); ++i) sum.values()[i] += x.values.values()[i];
  }
  const DenseMatrix exact = brute_force_degree_vectors(g, labels, 2);
  for (size_t i = 0; i < sum.values().size(); ++i)
    CHECK(std::abs(sum.values()[i] / repeats - exact.values()[i]) < 0.05);
}

TEST_CASE("non-private degree vectors equal brute force on graphs up to N=50") {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    const int n = 10 + static_cast<int>(seed) * 8;
    const Graph g = random_graph(n, 0.15, seed);
    RngStream lab(seed + 50);
    std::vector<int> labels(static_cast<size_t>(n));
    for (int& y : labels) y = static_cast<int>(lab.next_below(4));
    RngStream rng(1);
    const DegreeVectorMatrix x = find_degree_vec(g, labels, 4, kInfiniteEpsilon, rng);
    CHECK(x.values == brute_force_degree_vectors(g, labels, 4));
  }
}

TEST_CASE("non-private rows sum to the node degree") {
  const Graph g = random_graph(30, 0.2, 9);
  std::vector<int> labels(30);
  RngStream lab(10);
  for (int& y : labels) y = static_cast<int>(lab.next_below(3));
  RngStream rng(1);
  const DegreeVectorMatrix x = find_degree_vec(g, labels, 3, kInfiniteEpsilon, rng);
  for (int v = 0; v < 30; ++v) {
    double s = 0.0;
    for (double value : x.values.row(v)) s += value;
    CHECK(s == static_cast<double>(g.degree(v)));
  }
}

TEST_CASE("edge-DP sensitivity witness: degree vectors move by exactly L1 = 2") {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    for (int n = 2; n <= 8; ++n) {
      const Graph g = random_graph(n, 0.4, seed * 31 + n);
      RngStream lab(seed + 7);
      std::vector<int> labels(static_cast<size_t>(n));
      for (int& y : labels) y = static_cast<int>(lab.next_below(3));
      const DenseMatrix base = brute_force_degree_vectors(g, labels, 3);
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
          const Graph toggled = toggle_edge(g, u, v);
          const DenseMatrix other = brute_force_degree_vectors(toggled, labels, 3);
          double l1 = 0.0;
          int changed = 0;
          for (size_t i = 0; i < base.values().size(); ++i) {
            const double diff = std::abs(base.values()[i] - other.values()[i]);
            if (diff != 0.0) ++changed;
            l1 += diff;
          }
          CHECK(l1 == 2.0);
          CHECK(changed == 2);
        }
    }
  }
}

TEST_CASE("edge-DP sensitivity witness: adjacency triangle moves by exactly one entry") {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    for (int n = 2; n <= 8; ++n) {
      const Graph g = random_graph(n, 0.4, seed * 17 + n);
      const std::vector<double> base = upper_triangle(g);
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
          const std::vector<double> other = upper_triangle(toggle_edge(g, u, v));
          double l1 = 0.0;
          int changed = 0;
          for (size_t i = 0; i < base.size(); ++i) {
            const double diff = std::abs(base[i] - other[i]);
            if (diff != 0.0) ++changed;
            l1 += diff;
          }
          CHECK(changed == 1);
          CHECK(l1 == 1.0);
        }
    }
  }
}

TEST_CASE("dpgcn perturb at enormous epsilon reproduces the graph") {
  const Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}});
  // Seeded run; the noisy edge-count draw stays in [0, 1).
  RngStream rng(4);
  const PerturbedAdjacency p = dpgcn_perturb(g, 1e6, 1e5, rng);
  CHECK(p.edges == g.edge_list());
  CHECK(p.noisy_fraction == 0.0);
}

TEST_CASE("dpgcn perturb keeps exactly the clamped selected count") {
  const Graph g = random_graph(20, 0.2, 3);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed);
    const PerturbedAdjacency p = dpgcn_perturb(g, 2.0, 0.01, rng);
    CHECK(static_cast<int64_t>(p.edges.size()) == p.selected_count);
    CHECK(p.selected_count >= 0);
    CHECK(p.selected_count <= 190);
    // Symmetric with zero diagonal: edges are unique u < v pairs.
    for (const auto& [u, v] : p.edges) CHECK(u < v);
    std::set<std::pair<int, int>> unique(p.edges.begin(), p.edges.end());
    CHECK(unique.size() == p.edges.size());
  }
}

TEST_CASE("dpgcn perturb is invariant to edge input ordering") {
  std::vector<std::pair<int, int>> edges{{0, 1}, {2, 3}, {1, 2}, {0, 4}, {3, 4}};
  const Graph a = Graph::from_edges(5, edges);
  std::reverse(edges.begin(), edges.end());
  const Graph b = Graph::from_edges(5, edges);
  RngStream r1(11), r2(11);
  const PerturbedAdjacency pa = dpgcn_perturb(a, 1.5, 0.01, r1);
  const PerturbedAdjacency pb = dpgcn_perturb(b, 1.5, 0.01, r2);
  CHECK(pa.edges == pb.edges);
}

TEST_CASE("dpgcn perturb validates its budget split") {
  const Graph g = random_graph(5, 0.5, 1);
  RngStream rng(1);
  CHECK_THROWS_AS(dpgcn_perturb(g, 1.0, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(dpgcn_perturb(g, 1.0, -0.1, rng), std::invalid_argument);
}

TEST_CASE("lpgnet transductive ledger: nl charges of eps/nl") {
  const Dataset d = generate_bipartite({40, 30, 0.2, 0.25, 0.5}, 13);
  TrainOptions options;
  options.setting = Setting::transductive;
  options.eps = 4.0;
  options.nl = 2;
  TrainedModel model = train_model(ModelKind::lpgnet, d, options, quick_config(3, 12));
  const BudgetLedger& ledger = model.budget();
  REQUIRE(ledger.entries().size() == 2);
  CHECK(ledger.entries()[0].epsilon == 2.0);
  CHECK(ledger.entries()[1].epsilon == 2.0);
  CHECK(ledger.pool_total(BudgetPool::training_graph) == 4.0);
  CHECK(ledger.pool_total(BudgetPool::inference_graph) == 0.0);
}

TEST_CASE("lpgnet input dimension recurrence holds along the chain") {
  const Dataset d = generate_bipartite({40, 30, 0.2, 0.25, 0.5}, 14);
  TrainOptions options;
  options.nl = 3;
  TrainedModel model = train_model(ModelKind::lpgnet, d, options, quick_config(4, 8));
  const TrainedLpgnet& m = model.lpgnet();
  const int c = d.num_classes;
  REQUIRE(m.mlps.size() == 4);
  CHECK(m.mlps[0].input_dim == d.feature_dim());
  CHECK(m.mlps[1].input_dim == 2 * c);
  CHECK(m.mlps[2].input_dim == 4 * c);
  CHECK(m.mlps[3].input_dim == 6 * c);
}

TEST_CASE("dpgcn with infinite epsilon behaves exactly like gcn") {
  const Dataset d = generate_bipartite({40, 30, 0.2, 0.25, 0.5}, 15);
  TrainOptions options;
  const TrainConfig cfg = quick_config(5, 15);
  TrainedModel gcn = train_model(ModelKind::gcn, d, options, cfg);
  TrainedModel dpgcn = train_model(ModelKind::dpgcn, d, options, cfg);
  CHECK(gcn.gcn().net == dpgcn.gcn().net);
  CHECK(model_logits(gcn, d) == model_logits(dpgcn, d));
}

TEST_CASE("transductive inference reuses stored vectors and charges nothing") {
  const Dataset d = generate_bipartite({40, 30, 0.2, 0.25, 0.5}, 16);
  TrainOptions options;
  options.setting = Setting::transductive;
  options.eps = 2.0;
  options.nl = 1;
  TrainedModel model = train_model(ModelKind::lpgnet, d, options, quick_config(6, 10));
  const double before = model.budget().pool_total(BudgetPool::training_graph);
  (void)lpgnet_infer(model.lpgnet(), d.graph, d.features);
  (void)lpgnet_infer(model.lpgnet(), d.graph, d.features);
  CHECK(model.budget().pool_total(BudgetPool::training_graph) == before);
  CHECK(model.budget().pool_total(BudgetPool::inference_graph) == 0.0);
}

TEST_CASE("transductive inference without caches is an error") {
  TrainedLpgnet m;
  m.nl = 1;
  m.num_classes = 2;
  m.feature_dim = 2;
  m.plan = plan_budget(Setting::transductive, 2.0, 1);
  TrainConfig cfg = quick_config(1, 1);
  m.mlps.push_back(init_mlp(2, 2, cfg));
  m.mlps.push_back(init_mlp(4, 2, cfg));
  const Graph g = Graph::from_edges(2, {{0, 1}});
  DenseMatrix x(2, 2);
  CHECK_THROWS_WITH_AS(lpgnet_infer(m, g, x), doctest::Contains("degree vectors"),
                       std::runtime_error);
}

TEST_CASE("inductive inference charges once, then hits the cache") {
  const Dataset d = generate_bipartite({40, 30, 0.2, 0.25, 0.5}, 17);
  TrainOptions options;
  options.setting = Setting::inductive_different;
  options.eps = 3.0;
  options.nl = 1;
  TrainedModel model = train_model(ModelKind::lpgnet, d, options, quick_config(7, 10));
  CHECK(model.budget().pool_total(BudgetPool::training_graph) == 3.0);
  CHECK(model.budget().pool_total(BudgetPool::inference_graph) == 0.0);

  const DenseMatrix first = lpgnet_infer(model.lpgnet(), d.graph, d.features);
  CHECK(model.budget().pool_total(BudgetPool::inference_graph) == 3.0);
  const DenseMatrix second = lpgnet_infer(model.lpgnet(), d.graph, d.features);
  CHECK(model.budget().pool_total(BudgetPool::inference_graph) == 3.0);  // cache hit
  CHECK(first == second);
}

TEST_CASE("non-private transductive inference equals the training-time forward chain") {
  const Dataset d = generate_bipartite({40, 30, 0.2, 0.25, 0.5}, 18);
  TrainOptions options;
  options.nl = 1;
  TrainedModel model = train_model(ModelKind::lpgnet, d, options, quick_config(8, 10));
  TrainedLpgnet& m = model.lpgnet();

  // Manual replay of the chain with the cached degree vectors.
  const DenseMatrix logits0 = mlp_forward(m.mlps[0], d.features, false);
  const DenseMatrix f1 = concat_cols(logits0, m.train_cache[0]);
  const DenseMatrix expected = mlp_forward(m.mlps[1], f1, false);
  CHECK(lpgnet_infer(m, d.graph, d.features) == expected);
}

TEST_CASE("transductive lpgnet: perturbing one node's features moves only its own row") {
  const Dataset d = generate_bipartite({40, 30, 0.2, 0.25, 0.5}, 19);
  TrainOptions options;
  options.nl = 2;
  TrainedModel model = train_model(ModelKind::lpgnet, d, options, quick_config(9, 10));

  const DenseMatrix base = lpgnet_infer(model.lpgnet(), d.graph, d.features);
  DenseMatrix perturbed_features = d.features;
  const int target = 12;
  for (double& v : perturbed_features.row(target)) v *= 1.3;
  const DenseMatrix probed = lpgnet_infer(model.lpgnet(), d.graph, perturbed_features);
  for (int v = 0; v < base.rows(); ++v)
    for (int c = 0; c < base.cols(); ++c) {
      if (v == target) continue;
      CHECK(probed.at(v, c) == base.at(v, c));
    }
}

TEST_CASE("full cycle pool totals equal epsilon for every setting (theorem ledger check)") {
  const Dataset d = generate_bipartite({40, 30, 0.2, 0.25, 0.5}, 20);
  for (Setting setting : {Setting::transductive, Setting::inductive_different,
                          Setting::inductive_evolving}) {
    for (int nl : {1, 2}) {
      for (double eps : {1.0, 4.0, 6.0}) {
        TrainOptions options;
        options.setting = setting;
        options.eps = eps;
        options.nl = nl;
        TrainedModel model = train_model(ModelKind::lpgnet, d, options, quick_config(10, 6));
        (void)lpgnet_infer(model.lpgnet(), d.graph, d.features);
        const BudgetLedger& ledger = model.budget();
        CHECK(std::abs(ledger.pool_total(BudgetPool::training_graph) - eps) <= 1e-12);
        if (setting == Setting::inductive_different)
          CHECK(std::abs(ledger.pool_total(BudgetPool::inference_graph) - eps) <= 1e-12);
        else
          CHECK(ledger.pool_total(BudgetPool::inference_graph) == 0.0);
      }
    }
  }
}

TEST_CASE("checkpoint round trip is exact for every model kind") {
  const Dataset d = generate_bipartite({40, 30, 0.2, 0.25, 0.5}, 21);
  const fs::path dir = fs::temp_directory_path() / "lpgnet_test_ckpt";
  for (ModelKind kind : {ModelKind::mlp, ModelKind::gcn, ModelKind::dpgcn, ModelKind::lpgnet}) {
    fs::remove_all(dir);
    TrainOptions options;
    options.eps = kind == ModelKind::dpgcn || kind == ModelKind::lpgnet ? 2.0 : kInfiniteEpsilon;
    options.nl = 2;
    TrainedModel model = train_model(kind, d, options, quick_config(11, 6));
    save_model(model, dir);
    TrainedModel back = load_model(dir);
    CHECK(back.kind == model.kind);
    CHECK(model_logits(back, d) == model_logits(model, d));
    CHECK(back.budget().pool_total(BudgetPool::training_graph) ==
          model.budget().pool_total(BudgetPool::training_graph));
  }
}
