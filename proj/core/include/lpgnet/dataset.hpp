#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lpgnet/graph.hpp"
#include "lpgnet/matrix.hpp"

namespace lpgnet {

struct Split {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

/// Graph + dense features + labels + node split. Immutable after
/// construction; safe to share across threads by reference.
struct Dataset {
  Graph graph;
  DenseMatrix features;      // N x F
  std::vector<int> labels;   // values in [0, num_classes)
  Split split;
  int num_classes = 0;

  int num_nodes() const { return graph.num_nodes(); }
  int feature_dim() const { return features.cols(); }

  /// Throws if any structural invariant is violated (label range, split
  /// disjointness, dimension agreement).
  void validate() const;
};

/// Loads the four on-disk pieces. Formats:
///   graph:    "u v" per line, 0-based ids, '#' comments; duplicates and
///             reversed pairs collapse, self-loops are rejected
///   features: one node per line, F whitespace-separated decimals
///   labels:   one integer per line
///   split:    "train:"/"val:"/"test:" lines of ids, or a JSON object with
///             "train"/"val"/"test" arrays (both accepted)
Dataset load_dataset(const std::filesystem::path& graph_path,
                     const std::filesystem::path& features_path,
                     const std::filesystem::path& labels_path,
                     const std::filesystem::path& split_path);

/// Writes the same four files into `dir` (graph.txt, features.txt,
/// labels.txt, split.txt). Round-trips exactly through load_dataset.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

void save_graph(const Graph& graph, const std::filesystem::path& path);
Graph load_graph(const std::filesystem::path& path, int num_nodes);

struct BipartiteParams {
  int n1 = 500;
  int n2 = 400;
  double p_edge = 0.05;
  double flip1 = 0.25;
  double flip2 = 0.625;
};

/// Two-cluster bipartite dataset: every edge crosses clusters, features are
/// [1,-1] / [-1,1] with exactly floor(flip*n) rows swapped per cluster, and
/// the split is 50% train / 50% test with 30% of train held out for
/// validation. Deterministic per seed.
Dataset generate_bipartite(const BipartiteParams& params, uint64_t seed);

/// G(n, m): exactly `num_edges` distinct undirected edges sampled uniformly.
/// Labels are uniform over `num_classes`, features one-hot style per label,
/// split as in generate_bipartite.
Dataset generate_erdos_renyi(int num_nodes, int64_t num_edges, int num_classes, uint64_t seed);

}  // namespace lpgnet
