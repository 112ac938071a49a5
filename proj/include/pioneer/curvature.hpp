#pragma once

// Forman-Ricci curvature on weighted graphs (unity node weights) and the
// right-hand sides of the canonical and constrained Ricci flows. Everything
// here depends only on weight ratios to adjacent edges; curvature is
// therefore invariant under uniform weight rescaling and bounded above by 2.

#include <cmath>
#include <string>
#include <vector>

#include "pioneer/autodiff.hpp"
#include "pioneer/core.hpp"
#include "pioneer/graph.hpp"

namespace pioneer::curv {

/// R^F_ij = 2 - ( sum_{u~i, u!=j} sqrt(w_ij/w_iu) + sum_{v~j, v!=i} sqrt(w_ij/w_jv) ).
/// Generic core over any scalar weight type; weights must be positive.
template <class S>
std::vector<S> forman_curvature(const GraphTopology& g, const std::vector<S>& w) {
  using std::sqrt;
  std::vector<S> out(w.size(), S(0.0));
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const Edge& ed = g.edges[e];
    S acc(0.0);
    for (const auto& [e2, u] : g.incident[ed.i]) {
      if (u == ed.j) continue;
      acc = acc + sqrt(w[e] / w[e2]);
    }
    for (const auto& [e2, v] : g.incident[ed.j]) {
      if (v == ed.i) continue;
      acc = acc + sqrt(w[e] / w[e2]);
    }
    out[e] = S(2.0) - acc;
  }
  return out;
}

inline Vec forman_curvature(const WeightedGraph& g) {
  g.validate();
  return forman_curvature(g.topo, g.weights);
}

/// Per-edge neighbor-ratio sum g(e_ij) = 2 - R^F_ij, the quantity driving the
/// entropy-audit diagnostics.
inline Vec edge_ratio_sums(const WeightedGraph& g) {
  Vec r = forman_curvature(g);
  for (double& x : r) x = 2.0 - x;
  return r;
}

/// Sum of Forman curvature over all edges.
inline double ricci_total(const WeightedGraph& g) {
  double total = 0.0;
  for (double r : forman_curvature(g)) total += r;
  return total;
}

/// Canonical Ricci flow: dw_ij/dt = -R^F_ij w_ij.
inline Vec canonical_flow_rhs(const WeightedGraph& g) {
  Vec rhs = forman_curvature(g);
  for (size_t e = 0; e < rhs.size(); ++e) rhs[e] = -rhs[e] * g.weights[e];
  return rhs;
}

/// Constrained Ricci flow: dw_ij/dt = (R^F_ij - e^{f_ij}) w_ij with the
/// constraint values f_ij in (0,1), so e^f >= 1 as the entropy argument
/// requires.
inline Vec constrained_flow_rhs(const WeightedGraph& g, const Vec& f_vals) {
  if (f_vals.size() != g.weights.size())
    throw DomainError("constrained_flow_rhs: f/edge count mismatch");
  for (double f : f_vals) {
    if (!(f > 0.0 && f < 1.0))
      throw ContractViolation("constrained_flow_rhs: f outside (0,1): " + std::to_string(f));
  }
  Vec rhs = forman_curvature(g);
  for (size_t e = 0; e < rhs.size(); ++e)
    rhs[e] = (rhs[e] - std::exp(f_vals[e])) * g.weights[e];
  return rhs;
}

}  // namespace pioneer::curv
