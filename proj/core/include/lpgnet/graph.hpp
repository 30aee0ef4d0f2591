#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lpgnet {

/// Immutable undirected unweighted graph in CSR form. Both directions of
/// every edge are stored, so neighbor iteration is O(deg) with no lookup.
/// Neighbor lists are sorted ascending and duplicate-free; self-loops are
/// rejected at construction.
class Graph {
 public:
  Graph() = default;

  /// Builds from undirected pairs. Duplicate and reversed pairs collapse
  /// to one edge; a self-loop throws.
  static Graph from_edges(int num_nodes, std::vector<std::pair<int, int>> edges);

  int num_nodes() const { return num_nodes_; }
  /// Undirected edge count (total neighbor entries / 2).
  int64_t num_edges() const { return static_cast<int64_t>(neighbor_ids_.size()) / 2; }

  int degree(int v) const { return static_cast<int>(row_offsets_[v + 1] - row_offsets_[v]); }

  std::span<const int> neighbors(int v) const {
    return {neighbor_ids_.data() + row_offsets_[v],
            neighbor_ids_.data() + row_offsets_[v + 1]};
  }

  bool has_edge(int u, int v) const;

  /// Unique undirected pairs with u < v, ordered lexicographically.
  std::vector<std::pair<int, int>> edge_list() const;

  const std::vector<int64_t>& row_offsets() const { return row_offsets_; }
  const std::vector<int>& neighbor_ids() const { return neighbor_ids_; }

  bool operator==(const Graph&) const = default;

 private:
  int num_nodes_ = 0;
  std::vector<int64_t> row_offsets_{0};
  std::vector<int> neighbor_ids_;
};

struct GraphStats {
  int64_t nodes = 0;
  int64_t edges = 0;
  double density = 0.0;  // 2|E| / (N(N-1))
};

/// Exact node/edge counts and density. Requires N >= 2.
GraphStats graph_stats(const Graph& graph);

/// Per-node fraction of same-label neighbors and its per-cluster average.
/// Nodes of degree zero have no defined score; they are flagged by NaN and
/// excluded from the cluster averages.
struct HomophilyProfile {
  std::vector<double> per_node_score;   // NaN marks degree-0 nodes
  std::vector<double> per_cluster_avg;  // length C; NaN if the cluster has no scored node
  std::vector<int64_t> scored_per_cluster;

  bool has_score(int v) const;
};

HomophilyProfile homophily_profile(const Graph& graph, std::span<const int> labels,
                                   int num_classes);

}  // namespace lpgnet
