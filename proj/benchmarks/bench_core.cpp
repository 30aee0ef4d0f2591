#include <benchmark/benchmark.h>

#include "lpgnet/attacks.hpp"
#include "lpgnet/dataset.hpp"
#include "lpgnet/models.hpp"
#include "lpgnet/nn.hpp"

using namespace lpgnet;

namespace {

const Dataset& bipartite() {
  static const Dataset d = generate_bipartite({}, 6);
  return d;
}

const Dataset& citation_shaped() {
  static const Dataset d = generate_erdos_renyi(2708, 5429, 2, 6);
  return d;
}

void BM_LaplaceSample(benchmark::State& state) {
  RngStream rng(1);
  double sink = 0.0;
  for (auto _ : state) sink += laplace_sample(1.0, rng);
  benchmark::DoNotOptimize(sink);
}
BENCHMARK(BM_LaplaceSample);

void BM_DegreeVectors(benchmark::State& state) {
  const Dataset& d = bipartite();
  RngStream rng(2);
  for (auto _ : state) {
    auto x = find_degree_vec(d.graph, d.labels, d.num_classes, 2.0, rng);
    benchmark::DoNotOptimize(x.values.values().data());
  }
}
BENCHMARK(BM_DegreeVectors);

void BM_AdjacencyRelease(benchmark::State& state) {
  const Dataset& d = citation_shaped();
  for (auto _ : state) {
    RngStream rng(3);
    auto p = dpgcn_perturb(d.graph, 2.0, 0.01, rng);
    benchmark::DoNotOptimize(p.edges.data());
  }
}
BENCHMARK(BM_AdjacencyRelease)->Unit(benchmark::kMillisecond);

void BM_GcnForward(benchmark::State& state) {
  const Dataset& d = bipartite();
  const NormalizedAdjacency adj = normalize_adjacency(d.graph, AdjNorm::aug_norm_adj);
  TrainConfig cfg;
  const MlpModel model = init_mlp(d.feature_dim(), d.num_classes, cfg);
  for (auto _ : state) {
    auto logits = gcn_forward(model, adj, d.features, false);
    benchmark::DoNotOptimize(logits.values().data());
  }
}
BENCHMARK(BM_GcnForward);

void BM_TrainEpoch(benchmark::State& state) {
  const Dataset& d = bipartite();
  TrainConfig cfg;
  cfg.epochs = static_cast<int>(state.range(0));
  cfg.seed = 4;
  for (auto _ : state) {
    const DenseMatrix ft = take_rows(d.features, d.split.train);
    const DenseMatrix fv = take_rows(d.features, d.split.validation);
    std::vector<int> yt, yv;
    for (int r : d.split.train) yt.push_back(d.labels[static_cast<size_t>(r)]);
    for (int r : d.split.validation) yv.push_back(d.labels[static_cast<size_t>(r)]);
    auto model = train_mlp(ft, yt, fv, yv, d.num_classes, cfg);
    benchmark::DoNotOptimize(model.weights.data());
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_LinkTellerPair(benchmark::State& state) {
  const Dataset& d = bipartite();
  TrainOptions options;
  TrainConfig cfg;
  cfg.epochs = 20;
  TrainedModel model = train_model(ModelKind::gcn, d, options, cfg);
  const PosteriorOracle oracle = make_posterior_oracle(model, d);
  PairSampleOptions pair_options;
  pair_options.k = static_cast<int>(state.range(0));
  const EvalPairs pairs = sample_eval_pairs(d.graph, pair_options, 5);
  for (auto _ : state) {
    auto r = linkteller_scores(oracle, d.features, pairs);
    benchmark::DoNotOptimize(r.auc);
  }
}
BENCHMARK(BM_LinkTellerPair)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
