#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "pioneer/entropy.hpp"
#include "pioneer/graph.hpp"

using namespace pioneer;
using namespace pioneer::ent;

namespace {

WeightedGraph k2() { return WeightedGraph(GraphTopology(2, {{0, 1}}), {1.0}); }
WeightedGraph k3() {
  return WeightedGraph(GraphTopology(3, {{0, 1}, {0, 2}, {1, 2}}), {1.0, 1.0, 1.0});
}

WeightedGraph random_graph(Rng& rng, int n, int m) {
  GraphTopology topo = random_connected_topology(n, m, rng);
  Vec w(topo.edges.size());
  for (double& x : w) x = rng.uniform(0.2, 3.0);
  return WeightedGraph(std::move(topo), std::move(w));
}

}  // namespace

TEST_CASE("normalized laplacian hand values") {
  const Mat L2 = normalized_laplacian(k2());
  CHECK(L2(0, 0) == 1.0);
  CHECK(L2(1, 1) == 1.0);
  CHECK(L2(0, 1) == Catch::Approx(-1.0));
  CHECK(L2(1, 0) == Catch::Approx(-1.0));

  const Mat L3 = normalized_laplacian(k3());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(L3(i, j) == Catch::Approx(i == j ? 1.0 : -0.5).margin(1e-14));
}

TEST_CASE("laplacian symmetry and spectrum bounds on random graphs") {
  Rng rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(20));
    const WeightedGraph g = random_graph(rng, n, n + static_cast<int>(rng.below(n)));
    const Mat L = normalized_laplacian(g);
    for (int i = 0; i < n; ++i) {
      CHECK(L(i, i) == 1.0);
      for (int j = 0; j < n; ++j) CHECK(std::abs(L(i, j) - L(j, i)) <= 1e-14);
    }
    const SymEigResult eig = jacobi_eigh(L);
    CHECK(eig.eigenvalues.front() >= -1e-10);
    CHECK(eig.eigenvalues.back() <= 2.0 + 1e-10);
  }
}

TEST_CASE("jacobi eigensolver reconstructs the matrix") {
  Rng rng(103);
  for (int n : {2, 8, 23, 64}) {
    const WeightedGraph g = random_graph(rng, n, std::min(n * (n - 1) / 2, 2 * n));
    Mat A = normalized_laplacian(g);
    for (double& x : A.data) x /= n;
    const SymEigResult eig = jacobi_eigh(A);
    // reconstruct V diag(lambda) V^T and compare entrywise
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int kcol = 0; kcol < n; ++kcol)
          s += eig.eigenvectors(i, kcol) * eig.eigenvalues[kcol] * eig.eigenvectors(j, kcol);
        worst = std::max(worst, std::abs(s - A(i, j)));
      }
    }
    INFO("n=" << n << " sweeps=" << eig.sweeps);
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("von Neumann entropy oracle values") {
  CHECK(von_neumann_entropy(k2()) == Catch::Approx(0.0).margin(1e-12));
  CHECK(von_neumann_entropy(k3()) == Catch::Approx(std::log(2.0)).margin(1e-9));
}

TEST_CASE("entropy bounds, permutation and scale invariance") {
  Rng rng(107);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(12));
    const WeightedGraph g = random_graph(rng, n, n + static_cast<int>(rng.below(n)));
    const double h = von_neumann_entropy(g);
    CHECK(h >= -1e-9);
    CHECK(h <= std::log(static_cast<double>(n)) + 1e-9);

    // relabel nodes with a random permutation
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<Edge> edges;
    Vec w;
    for (size_t e = 0; e < g.topo.edges.size(); ++e) {
      int a = perm[g.topo.edges[e].i], b = perm[g.topo.edges[e].j];
      edges.push_back({std::min(a, b), std::max(a, b)});
      w.push_back(g.weights[e]);
    }
    // sort weights along with the edges the topology constructor will sort
    std::vector<size_t> idx(edges.size());
    for (size_t e = 0; e < idx.size(); ++e) idx[e] = e;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return edges[a] < edges[b]; });
    std::vector<Edge> se;
    Vec sw;
    for (size_t e : idx) {
      se.push_back(edges[e]);
      sw.push_back(w[e]);
    }
    const WeightedGraph gp(GraphTopology(n, se), sw);
    CHECK(std::abs(von_neumann_entropy(gp) - h) <= 1e-10);

    // uniform weight scaling leaves the normalized laplacian untouched
    Vec w2 = g.weights;
    for (double& x : w2) x *= 37.5;
    CHECK(std::abs(von_neumann_entropy(WeightedGraph(g.topo, w2)) - h) <= 1e-10);
  }
}

TEST_CASE("entropy rejects degenerate graphs") {
  CHECK_THROWS_AS(normalized_laplacian(WeightedGraph(GraphTopology(3, {{0, 1}}), {1.0})),
                  DomainError);  // node 2 isolated
}

TEST_CASE("audit flags decreases and writes CSV") {
  const GraphTopology topo(3, {{0, 1}, {0, 2}, {1, 2}});
  auto tri = [&](double w0) { return WeightedGraph(topo, {w0, 1.0, 1.0}); };

  // constant weights: zero violations
  std::vector<std::pair<double, WeightedGraph>> flat = {{0.0, tri(1.0)}, {0.1, tri(1.0)}, {0.2, tri(1.0)}};
  const MonotonicityReport ok = audit(flat, 1e-6);
  CHECK(ok.verdict);
  CHECK(ok.violations.empty());

  // skewing one weight away from uniform lowers the entropy
  std::vector<std::pair<double, WeightedGraph>> drop = {{0.0, tri(1.0)}, {1.0, tri(4.0)}};
  const MonotonicityReport bad = audit(drop, 1e-6);
  CHECK_FALSE(bad.verdict);
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0].first == 1.0);
  CHECK(bad.violations[0].second < 0.0);

  std::ostringstream os;
  write_audit_csv(os, bad, 1e-6);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,entropy,delta,violation\n", 0) == 0);
  CHECK(csv.find(",1\n") != std::string::npos);  // the violating row

  // mismatched topology across snapshots
  std::vector<std::pair<double, WeightedGraph>> mixed = {
      {0.0, tri(1.0)}, {1.0, WeightedGraph(GraphTopology(3, {{0, 1}, {1, 2}}), {1.0, 1.0})}};
  CHECK_THROWS_AS(audit(mixed, 1e-6), DomainError);
}
