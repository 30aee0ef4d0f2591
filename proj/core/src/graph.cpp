#include "lpgnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lpgnet {

Graph Graph::from_edges(int num_nodes, std::vector<std::pair<int, int>> edges) {
  if (num_nodes < 0) throw std::invalid_argument("graph: negative node count");
  for (auto& [u, v] : edges) {
    if (u == v) throw std::invalid_argument("graph: self-loop at node " + std::to_string(u));
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
      throw std::invalid_argument("graph: node id out of range: " + std::to_string(std::max(u, v)) +
                                  " (N=" + std::to_string(num_nodes) + ")");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  Graph g;
  g.num_nodes_ = num_nodes;
  std::vector<int> deg(num_nodes, 0);
  for (const auto& [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  g.row_offsets_.assign(num_nodes + 1, 0);
  for (int v = 0; v < num_nodes; ++v) g.row_offsets_[v + 1] = g.row_offsets_[v] + deg[v];
  g.neighbor_ids_.resize(static_cast<size_t>(g.row_offsets_[num_nodes]));
  std::vector<int64_t> cursor(g.row_offsets_.begin(), g.row_offsets_.end() - 1);
  for (const auto& [u, v] : edges) {
    g.neighbor_ids_[static_cast<size_t>(cursor[u]++)] = v;
    g.neighbor_ids_[static_cast<size_t>(cursor[v]++)] = u;
  }
  // Inputs were sorted by (u,v), so each neighbor list is already ascending.
  return g;
}

bool Graph::has_edge(int u, int v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::pair<int, int>> Graph::edge_list() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<size_t>(num_edges()));
  for (int u = 0; u < num_nodes_; ++u)
    for (int v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

GraphStats graph_stats(const Graph& graph) {
  if (graph.num_nodes() < 2) throw std::invalid_argument("graph_stats: need at least 2 nodes");
  GraphStats s;
  s.nodes = graph.num_nodes();
  s.edges = graph.num_edges();
  s.density = 2.0 * static_cast<double>(s.edges) /
              (static_cast<double>(s.nodes) * static_cast<double>(s.nodes - 1));
  return s;
}

bool HomophilyProfile::has_score(int v) const {
  return !std::isnan(per_node_score[static_cast<size_t>(v)]);
}

HomophilyProfile homophily_profile(const Graph& graph, std::span<const int> labels,
                                   int num_classes) {
  const int n = graph.num_nodes();
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("homophily_profile: labels length != num_nodes");
  HomophilyProfile p;
  p.per_node_score.assign(static_cast<size_t>(n), std::numeric_limits<double>::quiet_NaN());
  p.per_cluster_avg.assign(static_cast<size_t>(num_classes),
                           std::numeric_limits<double>::quiet_NaN());
  p.scored_per_cluster.assign(static_cast<size_t>(num_classes), 0);

  std::vector<double> sum(static_cast<size_t>(num_classes), 0.0);
  for (int v = 0; v < n; ++v) {
    const int d = graph.degree(v);
    if (d == 0) continue;
    int same = 0;
    for (int u : graph.neighbors(v))
      if (labels[static_cast<size_t>(u)] == labels[static_cast<size_t>(v)]) ++same;
    const double score = static_cast<double>(same) / d;
    p.per_node_score[static_cast<size_t>(v)] = score;
    const auto c = static_cast<size_t>(labels[static_cast<size_t>(v)]);
    sum[c] += score;
    ++p.scored_per_cluster[c];
  }
  for (int c = 0; c < num_classes; ++c)
    if (p.scored_per_cluster[static_cast<size_t>(c)] > 0)
      p.per_cluster_avg[static_cast<size_t>(c)] =
          sum[static_cast<size_t>(c)] / static_cast<double>(p.scored_per_cluster[static_cast<size_t>(c)]);
  return p;
}

}  // namespace lpgnet
