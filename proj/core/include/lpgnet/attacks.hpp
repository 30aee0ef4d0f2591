#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lpgnet/graph.hpp"
#include "lpgnet/matrix.hpp"
#include "lpgnet/models.hpp"

namespace lpgnet {

enum class PairMode { transductive_sampled, inductive_subgraph };
enum class DegreeBand { all, low, high };
enum class AttackKind { lpa, linkteller };
enum class SimilarityMetric { cosine, negative_euclidean, correlation };

std::string to_string(AttackKind attack);
AttackKind attack_from_string(const std::string& name);
std::string to_string(SimilarityMetric metric);
SimilarityMetric similarity_from_string(const std::string& name);

/// Evaluation pairs for a link-stealing attack: k edges and k non-edges
/// (transductive) or every pair inside a k-node sample (inductive).
struct EvalPairs {
  std::vector<std::pair<int, int>> positives;  // edges
  std::vector<std::pair<int, int>> negatives;  // non-edges
  PairMode mode = PairMode::transductive_sampled;
  DegreeBand band = DegreeBand::all;
  uint64_t seed = 0;
};

struct PairSampleOptions {
  PairMode mode = PairMode::transductive_sampled;
  int k = 500;
  DegreeBand band = DegreeBand::all;
  int band_size = 500;                    // node count per degree band
  std::span<const int> candidate_nodes;   // empty = all nodes; bands rank these
};

/// Transductive: k uniform edges and k uniform non-edges without
/// replacement. Inductive: k sampled nodes; positives/negatives are all
/// intra-sample pairs split by edge existence. A degree band first
/// restricts candidates to the band_size lowest/highest-degree nodes.
/// Throws when the graph cannot supply enough edges, non-edges or nodes.
EvalPairs sample_eval_pairs(const Graph& graph, const PairSampleOptions& options, uint64_t seed);

struct AttackResult {
  std::vector<double> positive_scores;
  std::vector<double> negative_scores;
  double auc = 0.5;
  AttackKind attack = AttackKind::lpa;
  uint64_t seed = 0;
};

/// P(random positive score > random negative score) + 1/2 P(equal),
/// computed exactly via midranks. Throws on an empty list.
double auc_score(std::span<const double> positive_scores, std::span<const double> negative_scores);

/// Influence probing: for each pair (u, v), query the oracle on the clean
/// features and on features with row v scaled by (1 + delta); the score is
/// max over both directions of ||(P'_u - P_u) / delta||_2.
AttackResult linkteller_scores(const PosteriorOracle& oracle, const DenseMatrix& features,
                               const EvalPairs& pairs, double delta = 1e-4);

/// Posterior similarity: score(u, v) = similarity of posterior rows u and v
/// under the metric (cosine by default; zero rows fall back to 0).
AttackResult lpa_scores(const DenseMatrix& posteriors, const EvalPairs& pairs,
                        SimilarityMetric metric = SimilarityMetric::cosine);

}  // namespace lpgnet
