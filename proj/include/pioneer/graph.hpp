#pragma once

// Undirected weighted graphs with a fixed topology. Weights are stored once
// per edge (i < j); the incidence lists are precomputed because curvature and
// message passing both iterate neighbors of both endpoints.

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "pioneer/core.hpp"

namespace pioneer {

struct Edge {
  int i = 0;
  int j = 0;
};

inline bool operator==(const Edge& a, const Edge& b) { return a.i == b.i && a.j == b.j; }
inline bool operator<(const Edge& a, const Edge& b) {
  return a.i != b.i ? a.i < b.i : a.j < b.j;
}

/// Immutable structure of an undirected simple graph. Weights live outside so
/// the same topology can carry evolving weight vectors.
struct GraphTopology {
  int num_nodes = 0;
  std::vector<Edge> edges;
  // per node: (edge index, opposite endpoint), sorted by edge index
  std::vector<std::vector<std::pair<int, int>>> incident;

  GraphTopology() = default;

  GraphTopology(int n, std::vector<Edge> e) : num_nodes(n), edges(std::move(e)) {
    std::sort(edges.begin(), edges.end());
    std::set<std::pair<int, int>> seen;
    incident.assign(static_cast<size_t>(n), {});
    for (size_t k = 0; k < edges.size(); ++k) {
      const Edge& ed = edges[k];
      if (ed.i < 0 || ed.j < 0 || ed.i >= n || ed.j >= n)
        throw DomainError("graph: node index out of range");
      if (ed.i >= ed.j) throw DomainError("graph: edges must satisfy i < j");
      if (!seen.insert({ed.i, ed.j}).second) throw DomainError("graph: duplicate edge");
      incident[ed.i].push_back({static_cast<int>(k), ed.j});
      incident[ed.j].push_back({static_cast<int>(k), ed.i});
    }
  }

  int num_edges() const { return static_cast<int>(edges.size()); }

  bool same_structure(const GraphTopology& o) const {
    return num_nodes == o.num_nodes && edges.size() == o.edges.size() &&
           std::equal(edges.begin(), edges.end(), o.edges.begin());
  }
};

/// Node set plus positively weighted undirected edges.
struct WeightedGraph {
  GraphTopology topo;
  Vec weights;  // aligned with topo.edges

  WeightedGraph() = default;
  WeightedGraph(GraphTopology t, Vec w) : topo(std::move(t)), weights(std::move(w)) {
    validate();
  }

  void validate() const {
    if (weights.size() != topo.edges.size())
      throw DomainError("weighted graph: weight/edge count mismatch");
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w))
        throw DomainError("weighted graph: weights must be positive and finite");
    }
  }

  /// Weighted degree of every node.
  Vec degrees() const {
    Vec d(static_cast<size_t>(topo.num_nodes), 0.0);
    for (size_t k = 0; k < topo.edges.size(); ++k) {
      d[topo.edges[k].i] += weights[k];
      d[topo.edges[k].j] += weights[k];
    }
    return d;
  }
};

/// Connected simple random graph: a random spanning tree plus uniformly
/// sampled extra edges up to m total. Requires n-1 <= m <= n(n-1)/2.
inline GraphTopology random_connected_topology(int n, int m, Rng& rng) {
  const int max_m = n * (n - 1) / 2;
  if (n < 2 || m < n - 1 || m > max_m)
    throw DomainError("random_connected_topology: infeasible (n, m)");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  std::set<std::pair<int, int>> chosen;
  for (int k = 1; k < n; ++k) {
    const int a = order[k];
    const int b = order[rng.below(k)];
    chosen.insert({std::min(a, b), std::max(a, b)});
  }
  while (static_cast<int>(chosen.size()) < m) {
    const int a = static_cast<int>(rng.below(n));
    const int b = static_cast<int>(rng.below(n));
    if (a == b) continue;
    chosen.insert({std::min(a, b), std::max(a, b)});
  }
  std::vector<Edge> edges;
  edges.reserve(chosen.size());
  for (const auto& [i, j] : chosen) edges.push_back({i, j});
  return GraphTopology(n, std::move(edges));
}

}  // namespace pioneer
