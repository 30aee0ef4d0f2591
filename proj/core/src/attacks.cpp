#include "lpgnet/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "lpgnet/rng.hpp"

namespace lpgnet {

std::string to_string(AttackKind attack) {
  return attack == AttackKind::lpa ? "lpa" : "linkteller";
}

AttackKind attack_from_string(const std::string& name) {
  if (name == "lpa") return AttackKind::lpa;
  if (name == "linkteller") return AttackKind::linkteller;
  throw std::invalid_argument("unknown attack \"" + name + "\"");
}

std::string to_string(SimilarityMetric metric) {
  switch (metric) {
    case SimilarityMetric::cosine: return "cosine";
    case SimilarityMetric::negative_euclidean: return "negative_euclidean";
    case SimilarityMetric::correlation: return "correlation";
  }
  return "?";
}

SimilarityMetric similarity_from_string(const std::string& name) {
  if (name == "cosine") return SimilarityMetric::cosine;
  if (name == "negative_euclidean") return SimilarityMetric::negative_euclidean;
  if (name == "correlation") return SimilarityMetric::correlation;
  throw std::invalid_argument("unknown similarity metric \"" + name + "\"");
}

namespace {

std::vector<int> band_nodes(const Graph& graph, std::span<const int> candidates, DegreeBand band,
                            int band_size) {
  std::vector<int> nodes;
  if (candidates.empty()) {
    nodes.resize(static_cast<size_t>(graph.num_nodes()));
    std::iota(nodes.begin(), nodes.end(), 0);
  } else {
    nodes.assign(candidates.begin(), candidates.end());
  }
  if (band == DegreeBand::all) return nodes;
  if (static_cast<int>(nodes.size()) < band_size)
    throw std::invalid_argument("sample_eval_pairs: fewer candidate nodes than the degree band size");
  // Stable rank by (degree, id) so band membership is deterministic.
  std::sort(nodes.begin(), nodes.end(), [&graph, band](int a, int b) {
    const int da = graph.degree(a), db = graph.degree(b);
    if (da != db) return band == DegreeBand::low ? da < db : da > db;
    return a < b;
  });
  nodes.resize(static_cast<size_t>(band_size));
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

}  // namespace

EvalPairs sample_eval_pairs(const Graph& graph, const PairSampleOptions& options, uint64_t seed) {
  if (options.k < 1) throw std::invalid_argument("sample_eval_pairs: k must be >= 1");
  EvalPairs out;
  out.mode = options.mode;
  out.band = options.band;
  out.seed = seed;
  RngStream rng(derive_seed(seed, {stream::kPairSampling}));

  const std::vector<int> nodes = band_nodes(graph, options.candidate_nodes, options.band,
                                            options.band_size);
  const auto n_nodes = static_cast<int64_t>(nodes.size());

  if (options.mode == PairMode::inductive_subgraph) {
    if (n_nodes < options.k)
      throw std::invalid_argument("sample_eval_pairs: not enough nodes to sample");
    std::vector<int> pool = nodes;
    for (int i = 0; i < options.k; ++i) {
      const auto j = i + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(n_nodes - i)));
      std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    }
    std::vector<int> sample(pool.begin(), pool.begin() + options.k);
    std::sort(sample.begin(), sample.end());
    for (size_t a = 0; a < sample.size(); ++a)
      for (size_t b = a + 1; b < sample.size(); ++b) {
        const auto pair = std::make_pair(sample[a], sample[b]);
        (graph.has_edge(pair.first, pair.second) ? out.positives : out.negatives).push_back(pair);
      }
    return out;
  }

  // Transductive: k uniform edges, k uniform non-edges, without replacement.
  std::vector<std::pair<int, int>> edges;
  if (options.band == DegreeBand::all && options.candidate_nodes.empty()) {
    edges = graph.edge_list();
  } else {
    std::unordered_set<int> allowed(nodes.begin(), nodes.end());
    for (const auto& e : graph.edge_list())
      if (allowed.count(e.first) && allowed.count(e.second)) edges.push_back(e);
  }
  const auto n_edges = static_cast<int64_t>(edges.size());
  const int64_t n_pairs = n_nodes * (n_nodes - 1) / 2;
  if (n_edges < options.k)
    throw std::invalid_argument("sample_eval_pairs: graph has only " + std::to_string(n_edges) +
                                " candidate edges, need " + std::to_string(options.k));
  if (n_pairs - n_edges < options.k)
    throw std::invalid_argument("sample_eval_pairs: graph has only " +
                                std::to_string(n_pairs - n_edges) + " candidate non-edges, need " +
                                std::to_string(options.k));

  for (int i = 0; i < options.k; ++i) {
    const auto j = i + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(n_edges - i)));
    std::swap(edges[static_cast<size_t>(i)], edges[static_cast<size_t>(j)]);
    out.positives.push_back(edges[static_cast<size_t>(i)]);
  }

  std::unordered_set<int64_t> taken;
  const auto pair_key = [&graph](int u, int v) {
    return static_cast<int64_t>(u) * graph.num_nodes() + v;
  };
  while (static_cast<int>(out.negatives.size()) < options.k) {
    auto u = nodes[static_cast<size_t>(rng.next_below(static_cast<uint64_t>(n_nodes)))];
    auto v = nodes[static_cast<size_t>(rng.next_below(static_cast<uint64_t>(n_nodes)))];
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (graph.has_edge(u, v)) continue;
    if (!taken.insert(pair_key(u, v)).second) continue;
    out.negatives.emplace_back(u, v);
  }
  return out;
}

double auc_score(std::span<const double> positive_scores, std::span<const double> negative_scores) {
  if (positive_scores.empty() || negative_scores.empty())
    throw std::invalid_argument("auc: empty score list");
  struct Tagged {
    double score;
    bool positive;
  };
  std::vector<Tagged> all;
  all.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) all.push_back({s, true});
  for (double s : negative_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

  // Midrank sum of the positives (Mann-Whitney U).
  double rank_sum = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k)
      if (all[k].positive) rank_sum += midrank;
    i = j;
  }
  const auto np = static_cast<double>(positive_scores.size());
  const auto nn = static_cast<double>(negative_scores.size());
  const double u_stat = rank_sum - np * (np + 1.0) / 2.0;
  return u_stat / (np * nn);
}

AttackResult linkteller_scores(const PosteriorOracle& oracle, const DenseMatrix& features,
                               const EvalPairs& pairs, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("linkteller: delta must be positive");
  AttackResult result;
  result.attack = AttackKind::linkteller;
  result.seed = pairs.seed;

  const DenseMatrix base = oracle(features);

  // One perturbed query per distinct endpoint; each query contributes the
  // directed influence scores of every pair that endpoint participates in.
  std::unordered_map<int, std::vector<std::pair<size_t, bool>>> by_target;
  const auto note = [&by_target](const std::vector<std::pair<int, int>>& list, bool positive) {
    for (size_t idx = 0; idx < list.size(); ++idx) {
      by_target[list[idx].first].emplace_back(idx, positive);
      by_target[list[idx].second].emplace_back(idx, positive);
    }
  };
  note(pairs.positives, true);
  note(pairs.negatives, false);

  result.positive_scores.assign(pairs.positives.size(), 0.0);
  result.negative_scores.assign(pairs.negatives.size(), 0.0);

  std::vector<int> targets;
  targets.reserve(by_target.size());
  for (const auto& [v, _] : by_target) targets.push_back(v);
  std::sort(targets.begin(), targets.end());

  DenseMatrix perturbed = features;
  for (int v : targets) {
    auto row = perturbed.row(v);
    const auto orig = features.row(v);
    for (size_t c = 0; c < row.size(); ++c) row[c] = orig[c] * (1.0 + delta);
    const DenseMatrix probed = oracle(perturbed);
    for (size_t c = 0; c < row.size(); ++c) row[c] = orig[c];

    for (const auto& [idx, positive] : by_target.at(v)) {
      const auto& pair = positive ? pairs.positives[idx] : pairs.negatives[idx];
      const int other = pair.first == v ? pair.second : pair.first;
      const auto pu = base.row(other);
      const auto qu = probed.row(other);
      double norm2 = 0.0;
      for (size_t c = 0; c < pu.size(); ++c) {
        const double d = (qu[c] - pu[c]) / delta;
        norm2 += d * d;
      }
      const double score = std::sqrt(norm2);
      auto& slot = positive ? result.positive_scores[idx] : result.negative_scores[idx];
      slot = std::max(slot, score);
    }
  }
  result.auc = auc_score(result.positive_scores, result.negative_scores);
  return result;
}

namespace {

double similarity(std::span<const double> a, std::span<const double> b, SimilarityMetric metric) {
  switch (metric) {
    case SimilarityMetric::cosine: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na == 0.0 || nb == 0.0) return 0.0;
      return dot / (std::sqrt(na) * std::sqrt(nb));
    }
    case SimilarityMetric::negative_euclidean: {
      double d2 = 0.0;
      for (size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
      return -std::sqrt(d2);
    }
    case SimilarityMetric::correlation: {
      const auto n = static_cast<double>(a.size());
      double ma = 0.0, mb = 0.0;
      for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
      }
      ma /= n;
      mb /= n;
      double cov = 0.0, va = 0.0, vb = 0.0;
      for (size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
      }
      if (va == 0.0 || vb == 0.0) return 0.0;
      return cov / (std::sqrt(va) * std::sqrt(vb));
    }
  }
  return 0.0;
}

}  // namespace

AttackResult lpa_scores(const DenseMatrix& posteriors, const EvalPairs& pairs,
                        SimilarityMetric metric) {
  AttackResult result;
  result.attack = AttackKind::lpa;
  result.seed = pairs.seed;
  const auto score_list = [&posteriors, metric](const std::vector<std::pair<int, int>>& list) {
    std::vector<double> scores;
    scores.reserve(list.size());
    for (const auto& [u, v] : list) {
      if (u >= posteriors.rows() || v >= posteriors.rows())
        throw std::invalid_argument("lpa: pair endpoint outside posterior rows");
      scores.push_back(similarity(posteriors.row(u), posteriors.row(v), metric));
    }
    return scores;
  };
  result.positive_scores = score_list(pairs.positives);
  result.negative_scores = score_list(pairs.negatives);
  result.auc = auc_score(result.positive_scores, result.negative_scores);
  return result;
}

}  // namespace lpgnet
