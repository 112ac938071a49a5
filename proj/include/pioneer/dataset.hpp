#pragma once

// Dataset formats, synthetic system generators, ingestion and evaluation
// metrics. The paper-scale real datasets are out of reach here, so three
// seeded synthetic systems stand in, each exercising a distinct curvature
// sign plus the entropy property:
//
//   spherical_flock       points on the kappa = +1 sphere chart contracting
//                         toward their mutual midpoint (proximity edges)
//   hyperbolic_diffusion  points drifting outward along a random tree in the
//                         kappa = -1 ball (tree + shortcut edges)
//   heat_graph            fixed connected graph, m >= n, whose weights follow
//                         the constrained Ricci flow from a burned-in state;
//                         the emitted entropy series is audited during
//                         construction, so it is non-decreasing by build
//
// Dataset schema (JSON): {name, kappa, feature_dim, num_nodes, sequences:
// [[{t, features: [[f64]], edges: [[i, j, w]]}]]} with undirected i < j edges.

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pioneer/core.hpp"
#include "pioneer/dynamics.hpp"
#include "pioneer/entropy.hpp"
#include "pioneer/geometry.hpp"
#include "pioneer/graph.hpp"
#include "pioneer/learning.hpp"
#include "pioneer/nn.hpp"

namespace pioneer::data {

struct TrajectoryDataset {
  std::string name;
  double kappa = -1.0;
  int feature_dim = 0;
  int num_nodes = 0;
  std::vector<std::vector<nn::Snapshot>> sequences;

  void validate() const {
    if (num_nodes < 1 || feature_dim < 1) throw DomainError("dataset: empty shape");
    for (const auto& seq : sequences) {
      double prev = -std::numeric_limits<double>::infinity();
      for (const nn::Snapshot& s : seq) {
        if (!(s.t > prev)) throw DomainError("dataset: timestamps must be strictly increasing");
        prev = s.t;
        if (static_cast<int>(s.features.size()) != num_nodes)
          throw DomainError("dataset: node count mismatch");
        for (const Vec& row : s.features) {
          if (static_cast<int>(row.size()) != feature_dim)
            throw DomainError("dataset: feature dim mismatch");
          check_finite(row, "feature");
        }
        s.validate();
      }
    }
  }
};

// ---------------------------------------------------------------------------
// JSON serialization

inline nlohmann::json to_json(const TrajectoryDataset& ds) {
  nlohmann::json j;
  j["name"] = ds.name;
  j["kappa"] = ds.kappa;
  j["feature_dim"] = ds.feature_dim;
  j["num_nodes"] = ds.num_nodes;
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& seq : ds.sequences) {
    nlohmann::json js = nlohmann::json::array();
    for (const nn::Snapshot& s : seq) {
      nlohmann::json snap;
      snap["t"] = s.t;
      snap["features"] = s.features;
      nlohmann::json edges = nlohmann::json::array();
      for (size_t e = 0; e < s.topo.edges.size(); ++e)
        edges.push_back({s.topo.edges[e].i, s.topo.edges[e].j, s.weights[e]});
      snap["edges"] = std::move(edges);
      js.push_back(std::move(snap));
    }
    seqs.push_back(std::move(js));
  }
  j["sequences"] = std::move(seqs);
  return j;
}

inline void save_dataset(std::ostream& os, const TrajectoryDataset& ds) {
  os << to_json(ds).dump(2) << "\n";
}

inline TrajectoryDataset dataset_from_json(const nlohmann::json& j) {
  TrajectoryDataset ds;
  try {
    ds.name = j.at("name").get<std::string>();
    ds.kappa = j.at("kappa").get<double>();
    ds.feature_dim = j.at("feature_dim").get<int>();
    ds.num_nodes = j.at("num_nodes").get<int>();
    int si = 0;
    for (const auto& jseq : j.at("sequences")) {
      std::vector<nn::Snapshot> seq;
      int ki = 0;
      for (const auto& jsnap : jseq) {
        nn::Snapshot s;
        s.t = jsnap.at("t").get<double>();
        s.features = jsnap.at("features").get<std::vector<Vec>>();
        std::vector<Edge> edges;
        Vec w;
        for (const auto& je : jsnap.at("edges")) {
          if (je.size() != 3)
            throw ParseError("sequence " + std::to_string(si) + " snapshot " +
                             std::to_string(ki) + ": edge entry must be [i, j, w]");
          edges.push_back({je[0].get<int>(), je[1].get<int>()});
          w.push_back(je[2].get<double>());
        }
        // constructor sorts; weights must follow the same order
        std::vector<size_t> idx(edges.size());
        for (size_t q = 0; q < idx.size(); ++q) idx[q] = q;
        std::sort(idx.begin(), idx.end(),
                  [&](size_t a, size_t b) { return edges[a] < edges[b]; });
        std::vector<Edge> se;
        Vec sw;
        for (size_t q : idx) {
          se.push_back(edges[q]);
          sw.push_back(w[q]);
        }
        s.topo = GraphTopology(ds.num_nodes, std::move(se));
        s.weights = std::move(sw);
        seq.push_back(std::move(s));
        ++ki;
      }
      ds.sequences.push_back(std::move(seq));
      ++si;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset: ") + e.what());
  }
  ds.validate();
  return ds;
}

inline TrajectoryDataset load_dataset(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset: ") + e.what());
  }
  return dataset_from_json(j);
}

// ---------------------------------------------------------------------------
// Ingestion: raw feature rows become manifold points via the origin
// exponential map (rows are treated as origin tangents); raw features are
// kept for metric computation. For kappa > 0, rows at or beyond the chart
// period are radially clamped to 0.98 of it before the map.

inline Vec ingest_row(const Vec& row, const Curvature& k) {
  Vec x = row;
  if (k.kappa > Curvature::kFlatEps) {
    const double limit = 0.98 * M_PI / (2.0 * k.sqrt_abs());
    const double n = std::sqrt(norm_sq(x));
    if (n >= limit) {
      for (double& c : x) c *= limit / n;
    }
  }
  return geo::project_to_domain(geo::exp_map_origin(x, k), k);
}

inline void ingest(TrajectoryDataset& ds) {
  const Curvature k(ds.kappa);
  for (auto& seq : ds.sequences) {
    for (nn::Snapshot& s : seq) {
      s.points.clear();
      s.points.reserve(s.features.size());
      for (const Vec& row : s.features) s.points.push_back(ingest_row(row, k));
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic system generators

struct GenerateOptions {
  int num_sequences = 4;
  double snapshot_spacing = 0.05;  // mean spacing of the jittered grid
  double jitter = 0.3;             // +/- fraction of the spacing
};

namespace detail {

inline std::vector<double> jittered_times(int count, Rng& rng, const GenerateOptions& opt) {
  std::vector<double> t(count);
  double cur = 0.0;
  for (int i = 0; i < count; ++i) {
    t[i] = cur;
    cur += opt.snapshot_spacing * (1.0 + opt.jitter * (2.0 * rng.uniform() - 1.0));
  }
  return t;
}

// proximity edges: union of k-nearest-neighbor pairs with weight exp(-d)
inline void proximity_edges(nn::Snapshot& snap, const std::vector<Vec>& pts, const Curvature& k,
                            int num_nodes, int knn) {
  std::set<std::pair<int, int>> pairs;
  for (int i = 0; i < num_nodes; ++i) {
    std::vector<std::pair<double, int>> by_dist;
    for (int j = 0; j < num_nodes; ++j) {
      if (j == i) continue;
      by_dist.push_back({geo::distance(pts[i], pts[j], k), j});
    }
    std::sort(by_dist.begin(), by_dist.end());
    for (int q = 0; q < knn && q < static_cast<int>(by_dist.size()); ++q) {
      const int j = by_dist[q].second;
      pairs.insert({std::min(i, j), std::max(i, j)});
    }
  }
  std::vector<Edge> edges;
  Vec w;
  for (const auto& [i, j] : pairs) {
    edges.push_back({i, j});
    w.push_back(std::exp(-geo::distance(pts[i], pts[j], k)));
  }
  snap.topo = GraphTopology(num_nodes, std::move(edges));
  snap.weights = std::move(w);
}

}  // namespace detail

/// Flock on the kappa = +1 sphere chart: every point is attracted along
/// geodesics toward the others, integrated at a fine step; snapshots carry
/// chart coordinates as features and proximity (3-NN) edges.
inline TrajectoryDataset generate_spherical_flock(int n, int t_count, uint64_t seed,
                                                  const GenerateOptions& opt = {}) {
  if (n < 3 || t_count < 4) throw DomainError("generate: need n >= 3, T >= 4");
  const Curvature k(1.0);
  TrajectoryDataset ds;
  ds.name = "spherical_flock";
  ds.kappa = 1.0;
  ds.feature_dim = 2;
  ds.num_nodes = n;
  Rng rng(seed);
  const double attraction = 1.2;
  const double dt_fine = 0.005;

  for (int q = 0; q < opt.num_sequences; ++q) {
    std::vector<Vec> pts(n);
    for (auto& p : pts) {
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      const double r = rng.uniform(0.25, 0.95);
      p = {r * std::cos(ang), r * std::sin(ang)};
    }
    const std::vector<double> times = detail::jittered_times(t_count, rng, opt);
    std::vector<nn::Snapshot> seq;
    double t_cur = 0.0;
    for (int s = 0; s < t_count; ++s) {
      while (t_cur < times[s] - 1e-12) {
        const double h = std::min(dt_fine, times[s] - t_cur);
        std::vector<Vec> vel(n, Vec(2, 0.0));
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            vel[i] = add(vel[i], geo::log_map(pts[i], pts[j], k));
          }
          vel[i] = scale(vel[i], attraction / (n - 1));
        }
        for (int i = 0; i < n; ++i) pts[i] = geo::exp_map(pts[i], scale(vel[i], h), k);
        t_cur += h;
      }
      nn::Snapshot snap;
      snap.t = times[s];
      snap.features = pts;
      detail::proximity_edges(snap, pts, k, n, 3);
      seq.push_back(std::move(snap));
    }
    ds.sequences.push_back(std::move(seq));
  }
  ds.validate();
  return ds;
}

/// Diffusion along a seeded random tree in the kappa = -1 ball: node i drifts
/// outward from near the origin along a direction tilted toward its parent's,
/// deepening the hierarchy over time. Edges are the tree plus a few random
/// shortcuts; weights are exp(-d).
inline TrajectoryDataset generate_hyperbolic_diffusion(int n, int t_count, uint64_t seed,
                                                       const GenerateOptions& opt = {}) {
  if (n < 3 || t_count < 4) throw DomainError("generate: need n >= 3, T >= 4");
  const int dim = 16;
  const Curvature k(-1.0);
  TrajectoryDataset ds;
  ds.name = "hyperbolic_diffusion";
  ds.kappa = -1.0;
  ds.feature_dim = dim;
  ds.num_nodes = n;
  Rng rng(seed);

  for (int q = 0; q < opt.num_sequences; ++q) {
    // random recursive tree with unit directions per node
    std::vector<int> parent(n, -1);
    for (int i = 1; i < n; ++i) parent[i] = static_cast<int>(rng.below(i));
    std::vector<Vec> dir(n, Vec(dim, 0.0));
    for (int i = 0; i < n; ++i) {
      Vec d(dim);
      for (double& c : d) c = rng.normal();
      if (parent[i] >= 0) d = add(scale(dir[parent[i]], 1.5), d);  // tilt toward the parent ray
      dir[i] = scale(d, 1.0 / std::sqrt(norm_sq(d)));
    }
    std::vector<double> depth(n, 0.0);
    for (int i = 1; i < n; ++i) depth[i] = depth[parent[i]] + 1.0;

    std::set<std::pair<int, int>> pairs;
    for (int i = 1; i < n; ++i) pairs.insert({std::min(i, parent[i]), std::max(i, parent[i])});
    const int shortcuts = std::max(1, n / 4);
    for (int c = 0; c < shortcuts; ++c) {
      const int a = static_cast<int>(rng.below(n)), b = static_cast<int>(rng.below(n));
      if (a != b) pairs.insert({std::min(a, b), std::max(a, b)});
    }

    const std::vector<double> times = detail::jittered_times(t_count, rng, opt);
    std::vector<nn::Snapshot> seq;
    for (int s = 0; s < t_count; ++s) {
      std::vector<Vec> pts(n);
      for (int i = 0; i < n; ++i) {
        const double radius = 0.1 + 0.35 * depth[i] / (1.0 + depth[i]) + 0.25 * times[s];
        pts[i] = geo::exp_map_origin(scale(dir[i], radius), k);
      }
      nn::Snapshot snap;
      snap.t = times[s];
      snap.features.resize(n);
      for (int i = 0; i < n; ++i) snap.features[i] = geo::log_map_origin(pts[i], k);
      std::vector<Edge> edges;
      Vec w;
      for (const auto& [i, j] : pairs) {
        edges.push_back({i, j});
        w.push_back(std::exp(-geo::distance(pts[i], pts[j], k)));
      }
      snap.topo = GraphTopology(n, std::move(edges));
      snap.weights = std::move(w);
      seq.push_back(std::move(snap));
    }
    ds.sequences.push_back(std::move(seq));
  }
  ds.validate();
  return ds;
}

/// Fixed connected random graph with m >= n whose weights follow the
/// constrained Ricci flow under a fixed random f-surrogate. The flow is
/// burned in first and the emitted window is audited during construction
/// (burn-in doubles on violation), so the entropy series of every sequence
/// is non-decreasing by build. Features are three independent heat fields
/// diffusing over the graph.
inline TrajectoryDataset generate_heat_graph(int n, int t_count, uint64_t seed,
                                             const GenerateOptions& opt = {}) {
  if (n < 3 || t_count < 4) throw DomainError("generate: need n >= 3, T >= 4");
  const Curvature k(-1.0);
  const int fdim = 3;
  TrajectoryDataset ds;
  ds.name = "heat_graph";
  ds.kappa = -1.0;
  ds.feature_dim = fdim;
  ds.num_nodes = n;
  Rng rng(seed);
  const double dt_flow = 1e-3;

  for (int q = 0; q < opt.num_sequences; ++q) {
    const int m = std::min(2 * n, n * (n - 1) / 2);
    const GraphTopology topo = random_connected_topology(n, m, rng);
    Vec f(topo.edges.size());
    for (double& x : f) x = sigmoid(rng.normal() * 0.5);
    Vec w0(topo.edges.size());
    for (double& x : w0) x = rng.uniform(0.5, 2.0);

    const std::vector<double> times = detail::jittered_times(t_count, rng, opt);
    std::vector<Vec> snapshots_w;
    int burn_in = 3000;
    for (int attempt = 0;; ++attempt) {
      Vec w = w0;
      auto advance = [&](double span) {
        const int steps = std::max(1, static_cast<int>(std::ceil(span / dt_flow - 1e-12)));
        const double h = span / steps;
        for (int s = 0; s < steps; ++s) {
          const Vec r = curv::forman_curvature(topo, w);
          for (size_t e = 0; e < w.size(); ++e) w[e] *= std::exp(h * (r[e] - std::exp(f[e])));
        }
      };
      advance(burn_in * dt_flow);
      snapshots_w.clear();
      snapshots_w.push_back(w);
      for (int s = 1; s < t_count; ++s) {
        advance(times[s] - times[s - 1]);
        snapshots_w.push_back(w);
      }
      // construction audit: the emitted entropy series must be non-decreasing
      std::vector<std::pair<double, WeightedGraph>> traj;
      for (int s = 0; s < t_count; ++s) traj.push_back({times[s], WeightedGraph(topo, snapshots_w[s])});
      if (ent::audit(traj, 1e-9).verdict) break;
      if (attempt >= 6)
        throw NumericError("generate_heat_graph: no monotone window found; try another seed");
      burn_in *= 2;
    }

    // normalize the whole trajectory so weights sit at softmax-like scale
    // (one global factor: the flow is exactly equivariant under it)
    double mean_w = 0.0;
    for (double x : snapshots_w.front()) mean_w += x;
    mean_w /= snapshots_w.front().size();
    const double target = 1.0 / std::max(1.0, 2.0 * m / static_cast<double>(n));
    const double scale_w = target / mean_w;
    for (Vec& w : snapshots_w)
      for (double& x : w) x *= scale_w;

    // heat features: dX/dt = -L_norm X from a random start, fine Euler
    std::vector<Vec> X(n, Vec(fdim));
    for (auto& row : X)
      for (double& c : row) c = rng.normal();
    const Mat L = ent::normalized_laplacian(WeightedGraph(topo, snapshots_w.front()));
    auto heat_step = [&](double h) {
      std::vector<Vec> dX(n, Vec(fdim, 0.0));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int c = 0; c < fdim; ++c) dX[i][c] -= L(i, j) * X[j][c] * h;
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < fdim; ++c) X[i][c] += dX[i][c];
    };

    std::vector<nn::Snapshot> seq;
    for (int s = 0; s < t_count; ++s) {
      if (s > 0) {
        const double span = times[s] - times[s - 1];
        const int steps = std::max(1, static_cast<int>(std::ceil(span / 0.005)));
        for (int u = 0; u < steps; ++u) heat_step(span / steps);
      }
      nn::Snapshot snap;
      snap.t = times[s];
      snap.features = X;
      snap.topo = topo;
      snap.weights = snapshots_w[s];
      seq.push_back(std::move(snap));
    }
    ds.sequences.push_back(std::move(seq));
  }
  ds.validate();
  return ds;
}

inline TrajectoryDataset generate(const std::string& system, int n, int t_count, uint64_t seed,
                                  const GenerateOptions& opt = {}) {
  if (system == "spherical_flock") return generate_spherical_flock(n, t_count, seed, opt);
  if (system == "hyperbolic_diffusion") return generate_hyperbolic_diffusion(n, t_count, seed, opt);
  if (system == "heat_graph") return generate_heat_graph(n, t_count, seed, opt);
  throw DomainError("generate: unknown system '" + system + "'");
}

// ---------------------------------------------------------------------------
// Evaluation

struct MetricReport {
  double mape = 0.0;  // percent
  double rmse = 0.0;
  int horizon = 0;
};

struct EvalResult {
  MetricReport model;
  MetricReport persistence;  // copy-last-observation baseline, same metric path
};

constexpr double kMapeFloor = 1e-8;

namespace detail {
struct MetricAccum {
  double abs_pct = 0.0;
  double sq = 0.0;
  long count = 0;
  void add(double y, double yhat) {
    abs_pct += std::abs(y - yhat) / std::max(std::abs(y), kMapeFloor);
    sq += (y - yhat) * (y - yhat);
    ++count;
  }
  MetricReport report(int horizon) const {
    MetricReport r;
    r.horizon = horizon;
    if (count > 0) {
      r.mape = 100.0 * abs_pct / count;
      r.rmse = std::sqrt(sq / count);
    }
    return r;
  }
};
}  // namespace detail

/// Rolls the model forward over the last `horizon` snapshots of every
/// sequence (observing the rest), decodes, maps back to raw feature space
/// via Log_o and scores MAPE/RMSE element-wise against the held-out rows.
/// The persistence baseline goes through the identical metric path.
inline EvalResult evaluate(const nn::ModelParams& params, const nn::ModelConfig& cfg,
                           const TrajectoryDataset& dataset, int horizon) {
  if (horizon < 1) throw DomainError("evaluate: horizon must be >= 1");
  TrajectoryDataset local;
  const TrajectoryDataset* src = &dataset;
  if (!dataset.sequences.empty() && !dataset.sequences.front().empty() &&
      dataset.sequences.front().front().points.empty()) {
    local = dataset;
    ingest(local);
    src = &local;
  }
  const TrajectoryDataset& ds = *src;
  const Curvature k = cfg.curvature();
  detail::MetricAccum model_acc, persist_acc;
  for (const auto& seq : ds.sequences) {
    if (static_cast<int>(seq.size()) <= horizon)
      throw DomainError("evaluate: horizon exceeds sequence length");
    const std::vector<nn::Snapshot> observed(seq.begin(), seq.end() - horizon);
    const std::vector<nn::Snapshot> held_out(seq.end() - horizon, seq.end());

    const nn::InitialState init = nn::encode_initial_state(observed, params, cfg);
    dyn::SystemState s0{observed.back().t, init.z, init.w};
    std::vector<double> times;
    for (const nn::Snapshot& s : held_out) times.push_back(s.t);
    const dyn::IntegratorConfig icfg{cfg.base_step, 8};
    const auto states = dyn::integrate(s0, times, init.topo, params, cfg, icfg);

    const std::vector<Vec>& last_obs = observed.back().features;
    for (size_t h = 0; h < held_out.size(); ++h) {
      const auto decoded = nn::decode(states[h].z, params.decoder_W, k, cfg.use_gyro());
      for (int i = 0; i < ds.num_nodes; ++i) {
        const Vec pred_raw = geo::log_map_origin(decoded[i], k);
        for (int c = 0; c < ds.feature_dim; ++c) {
          const double y = held_out[h].features[i][c];
          model_acc.add(y, pred_raw[c]);
          persist_acc.add(y, last_obs[i][c]);
        }
      }
    }
  }
  return {model_acc.report(horizon), persist_acc.report(horizon)};
}

}  // namespace pioneer::data
