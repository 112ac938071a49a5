#pragma once

// von Neumann graph entropy and monotonicity auditing.
//
// H = -sum_i lambda_i ln lambda_i over the eigenvalues of (1/n) L with
// L = I - D^{-1/2} A D^{-1/2}. The spectrum is obtained with a cyclic Jacobi
// eigensolver: dependency-free and robust at the few-hundred-node scale this
// library targets. Entropy is a monitor only and is never differentiated.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pioneer/core.hpp"
#include "pioneer/graph.hpp"

namespace pioneer::ent {

struct SymEigResult {
  Vec eigenvalues;   // ascending
  Mat eigenvectors;  // column k pairs with eigenvalues[k]
  int sweeps = 0;
};

/// Cyclic Jacobi for symmetric matrices. Terminates when the off-diagonal
/// Frobenius norm drops below `tol`; throws NumericError (with the sweep
/// count) if that does not happen within `max_sweeps`.
inline SymEigResult jacobi_eigh(const Mat& A, double tol = 1e-12, int max_sweeps = 100) {
  const int n = A.rows;
  if (n != A.cols) throw DomainError("jacobi_eigh: matrix not square");
  Mat a = A;
  Mat v(n, n);
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > tol) {
    if (++sweep > max_sweeps)
      throw NumericError("jacobi_eigh: no convergence after " + std::to_string(max_sweeps) +
                         " sweeps");
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) == 0.0) continue;
        // rotation angle from the standard two-by-two symmetric Schur problem
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int r = 0; r < n; ++r) {
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (int r = 0; r < n; ++r) {
          const double apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        for (int r = 0; r < n; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }

  SymEigResult res;
  res.sweeps = sweep;
  res.eigenvalues.resize(n);
  for (int i = 0; i < n; ++i) res.eigenvalues[i] = a(i, i);
  // sort ascending, carrying eigenvectors along
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int x, int y) { return res.eigenvalues[x] < res.eigenvalues[y]; });
  Vec sorted(n);
  Mat vs(n, n);
  for (int k = 0; k < n; ++k) {
    sorted[k] = res.eigenvalues[idx[k]];
    for (int r = 0; r < n; ++r) vs(r, k) = v(r, idx[k]);
  }
  res.eigenvalues = std::move(sorted);
  res.eigenvectors = std::move(vs);
  return res;
}

/// L = I - D^{-1/2} A D^{-1/2}; rejects isolated (zero-degree) nodes.
inline Mat normalized_laplacian(const WeightedGraph& g) {
  g.validate();
  const int n = g.topo.num_nodes;
  const Vec deg = g.degrees();
  for (int i = 0; i < n; ++i) {
    if (!(deg[i] > 0.0)) throw DomainError("normalized_laplacian: isolated node " + std::to_string(i));
  }
  Mat L(n, n);
  for (int i = 0; i < n; ++i) L(i, i) = 1.0;
  for (size_t e = 0; e < g.topo.edges.size(); ++e) {
    const Edge& ed = g.topo.edges[e];
    const double x = g.weights[e] / std::sqrt(deg[ed.i] * deg[ed.j]);
    L(ed.i, ed.j) = -x;
    L(ed.j, ed.i) = -x;
  }
  return L;
}

/// H = -sum lambda ln lambda over eigenvalues of L/n, with 0 ln 0 := 0.
/// L/n has unit trace and a non-negative spectrum, so 0 <= H <= ln n.
inline double von_neumann_entropy(const WeightedGraph& g) {
  if (g.topo.num_nodes < 2) throw DomainError("von_neumann_entropy: need n >= 2");
  Mat L = normalized_laplacian(g);
  const double inv_n = 1.0 / g.topo.num_nodes;
  for (double& x : L.data) x *= inv_n;
  const SymEigResult eig = jacobi_eigh(L);
  double h = 0.0;
  for (double lam : eig.eigenvalues) {
    if (lam < 0.0) {
      if (lam < -1e-9) throw NumericError("von_neumann_entropy: negative eigenvalue");
      continue;  // round-off below zero contributes nothing
    }
    if (lam > 0.0) h -= lam * std::log(lam);
  }
  return h < 0.0 ? 0.0 : h;
}

// ---------------------------------------------------------------------------
// Monotonicity auditing

struct EntropySeries {
  std::vector<double> t;
  std::vector<double> entropy;
};

struct MonotonicityReport {
  EntropySeries series;
  std::vector<std::pair<double, double>> violations;  // (t_{k+1}, dH) with dH < -tol
  bool verdict = true;                                // true iff violations empty
};

/// Computes the entropy series of a weight trajectory over a shared topology
/// and flags every consecutive decrease below -tol.
inline MonotonicityReport audit(const std::vector<std::pair<double, WeightedGraph>>& trajectory,
                                double tol) {
  if (tol < 0.0) throw DomainError("audit: tol must be >= 0");
  if (trajectory.empty()) throw DomainError("audit: empty trajectory");
  MonotonicityReport rep;
  const GraphTopology& ref = trajectory.front().second.topo;
  for (const auto& [t, g] : trajectory) {
    if (!g.topo.same_structure(ref)) throw DomainError("audit: topology changed across snapshots");
    if (!rep.series.t.empty() && t <= rep.series.t.back())
      throw DomainError("audit: timestamps must be strictly increasing");
    rep.series.t.push_back(t);
    rep.series.entropy.push_back(von_neumann_entropy(g));
  }
  for (size_t k = 0; k + 1 < rep.series.t.size(); ++k) {
    const double dh = rep.series.entropy[k + 1] - rep.series.entropy[k];
    if (dh < -tol) rep.violations.push_back({rep.series.t[k + 1], dh});
  }
  rep.verdict = rep.violations.empty();
  return rep;
}

/// CSV serialization: header `t,entropy,delta,violation`, one row per snapshot
/// (delta of the first row is 0).
inline void write_audit_csv(std::ostream& os, const MonotonicityReport& rep, double tol) {
  os << "t,entropy,delta,violation\n";
  char buf[96];
  for (size_t k = 0; k < rep.series.t.size(); ++k) {
    const double delta = k == 0 ? 0.0 : rep.series.entropy[k] - rep.series.entropy[k - 1];
    const int viol = (k > 0 && delta < -tol) ? 1 : 0;
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d\n", rep.series.t[k],
                  rep.series.entropy[k], delta, viol);
    os << buf;
  }
}

}  // namespace pioneer::ent
