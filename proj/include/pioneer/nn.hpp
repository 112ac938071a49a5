#pragma once

// Learnable components: time encoding, temporal attention, manifold GCN
// encoder, GAT vector field, constraint MLP, the manifold-preserving decoder
// and parameter initialization/serialization. All forward code is generic
// over the scalar type; ParamsT<ad::Var> runs the identical path under the
// gradient tape.

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pioneer/autodiff.hpp"
#include "pioneer/core.hpp"
#include "pioneer/geometry.hpp"
#include "pioneer/graph.hpp"

namespace pioneer::nn {

enum class Ablation { none, woEvo, woRic, woCon, woGyr };
enum class GatAttention { flow_weights, learned };

inline std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::woEvo: return "woEvo";
    case Ablation::woRic: return "woRic";
    case Ablation::woCon: return "woCon";
    case Ablation::woGyr: return "woGyr";
  }
  return "none";
}

inline Ablation ablation_from_string(const std::string& s) {
  if (s == "none") return Ablation::none;
  if (s == "woEvo") return Ablation::woEvo;
  if (s == "woRic") return Ablation::woRic;
  if (s == "woCon") return Ablation::woCon;
  if (s == "woGyr") return Ablation::woGyr;
  throw ParseError("unknown ablation flag: " + s);
}

struct ModelConfig {
  int feature_dim = 2;      // F_in = F_out
  int latent_dim = 16;      // d
  int gat_layer_count = 2;
  int mlp_hidden_layers = 1;  // the constraint net has exactly one hidden layer
  int encoder_layers = 1;
  int time_dim = 8;         // even, >= 2
  double learning_rate = 5e-4;
  double kappa = -1.0;
  double base_step = 0.01;
  int epochs = 200;
  double split_ratio = 0.5;
  Ablation ablation = Ablation::none;
  GatAttention gat_attention = GatAttention::flow_weights;
  bool dense_init = false;  // initial-weight softmax over all pairs instead of observed edges
  bool plain_euler = false; // additive weight update instead of the log-space one

  Curvature curvature() const { return Curvature(kappa); }
  bool use_gyro() const { return ablation != Ablation::woGyr; }

  void validate() const {
    if (feature_dim < 1 || latent_dim < 2) throw DomainError("config: bad dimensions");
    if (time_dim < 2 || time_dim % 2 != 0) throw DomainError("config: time_dim must be even, >= 2");
    if (gat_layer_count < 1) throw DomainError("config: need at least one GAT layer");
    if (mlp_hidden_layers != 1) throw DomainError("config: the constraint MLP has one hidden layer");
    if (encoder_layers < 1) throw DomainError("config: need at least one encoder layer");
    if (!(base_step > 0.0)) throw DomainError("config: base_step must be positive");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw DomainError("config: split_ratio in (0,1)");
  }
};

// ---------------------------------------------------------------------------
// Parameters

template <class S>
struct GatLayerT {
  MatX<S> W;  // d x d feature transform
  VecX<S> a;  // 2d attention vector (used in learned-attention mode)
};

template <class S>
struct MlpT {
  MatX<S> W1;  // 2d x d
  VecX<S> b1;  // d
  MatX<S> W2;  // d x 1
  VecX<S> b2;  // 1
};

template <class S>
struct ParamsT {
  MatX<S> encoder_W;                     // F_in x d
  std::vector<MatX<S>> encoder_hidden;   // (encoder_layers - 1) d x d matrices
  VecX<S> attn_w;                        // 2 * time_dim
  std::vector<GatLayerT<S>> gat_layers;
  MlpT<S> mlp;
  MatX<S> decoder_W;                     // d x F_out
};

using ModelParams = ParamsT<double>;
/// Gradients are shape-matched parameter tensors.
using GradientSet = ParamsT<double>;

/// Visits every tensor as a flat S-vector, in a fixed order shared by
/// initialization, Adam, flattening and checkpoints.
template <class S, class Fn>
void visit_tensors(ParamsT<S>& p, Fn&& fn) {
  fn("encoder_W", p.encoder_W.data);
  for (size_t l = 0; l < p.encoder_hidden.size(); ++l)
    fn("encoder_hidden[" + std::to_string(l) + "]", p.encoder_hidden[l].data);
  fn("attn_w", p.attn_w);
  for (size_t k = 0; k < p.gat_layers.size(); ++k) {
    fn("gat_layers[" + std::to_string(k) + "].W", p.gat_layers[k].W.data);
    fn("gat_layers[" + std::to_string(k) + "].a", p.gat_layers[k].a);
  }
  fn("mlp.W1", p.mlp.W1.data);
  fn("mlp.b1", p.mlp.b1);
  fn("mlp.W2", p.mlp.W2.data);
  fn("mlp.b2", p.mlp.b2);
  fn("decoder_W", p.decoder_W.data);
}

/// Element-wise structural map ParamsT<U> -> ParamsT<T>.
template <class T, class U, class Fn>
ParamsT<T> map_params(const ParamsT<U>& src, Fn&& f) {
  ParamsT<T> out;
  auto mat = [&](const MatX<U>& m) {
    MatX<T> r(m.rows, m.cols);
    for (size_t i = 0; i < m.data.size(); ++i) r.data[i] = f(m.data[i]);
    return r;
  };
  auto vec = [&](const VecX<U>& v) {
    VecX<T> r(v.size(), T(0.0));
    for (size_t i = 0; i < v.size(); ++i) r[i] = f(v[i]);
    return r;
  };
  out.encoder_W = mat(src.encoder_W);
  for (const auto& m : src.encoder_hidden) out.encoder_hidden.push_back(mat(m));
  out.attn_w = vec(src.attn_w);
  for (const auto& l : src.gat_layers) out.gat_layers.push_back({mat(l.W), vec(l.a)});
  out.mlp = {mat(src.mlp.W1), vec(src.mlp.b1), mat(src.mlp.W2), vec(src.mlp.b2)};
  out.decoder_W = mat(src.decoder_W);
  return out;
}

/// Registers every parameter as a tape leaf.
inline ParamsT<ad::Var> lift(const ModelParams& p, ad::Tape& tape) {
  return map_params<ad::Var>(p, [&](double x) { return ad::Var(x, &tape); });
}

/// Reads tape adjoints back into a shape-matched gradient set. Throws
/// NumericError naming the first non-finite entry.
inline GradientSet collect_gradients(ParamsT<ad::Var>& lifted, const ad::Tape& tape) {
  GradientSet g = map_params<double>(lifted, [&](const ad::Var& v) {
    return v.tracked() ? tape.adjoint(v.id) : 0.0;
  });
  visit_tensors(g, [](const std::string& name, const Vec& t) {
    for (double x : t) {
      if (!std::isfinite(x)) throw NumericError("non-finite gradient in " + name);
    }
  });
  return g;
}

/// Glorot-uniform matrices, zero biases and a zero temporal-attention vector;
/// deterministic in the seed (draws happen in visit_tensors order).
inline ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  const int d = cfg.latent_dim;
  ModelParams p;
  p.encoder_W = Mat(cfg.feature_dim, d);
  for (int l = 1; l < cfg.encoder_layers; ++l) p.encoder_hidden.push_back(Mat(d, d));
  p.attn_w.assign(static_cast<size_t>(2 * cfg.time_dim), 0.0);
  p.gat_layers.resize(cfg.gat_layer_count);
  for (auto& l : p.gat_layers) {
    l.W = Mat(d, d);
    l.a.assign(static_cast<size_t>(2 * d), 0.0);
  }
  p.mlp = {Mat(2 * d, d), Vec(static_cast<size_t>(d), 0.0), Mat(d, 1), Vec(1, 0.0)};
  p.decoder_W = Mat(d, cfg.feature_dim);

  Rng rng(seed);
  auto glorot = [&](Vec& t, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& x : t) x = rng.uniform(-limit, limit);
  };
  visit_tensors(p, [&](const std::string& name, Vec& t) {
    if (name == "encoder_W") glorot(t, cfg.feature_dim, d);
    else if (name.rfind("encoder_hidden", 0) == 0) glorot(t, d, d);
    else if (name.rfind("gat_layers", 0) == 0 && name.find(".W") != std::string::npos)
      glorot(t, d, d);
    else if (name.rfind("gat_layers", 0) == 0 && name.find(".a") != std::string::npos)
      glorot(t, 2 * d, 1);
    else if (name == "mlp.W1") glorot(t, 2 * d, d);
    else if (name == "mlp.W2") glorot(t, d, 1);
    else if (name == "decoder_W") glorot(t, d, cfg.feature_dim);
    // biases and attn_w stay zero
  });
  return p;
}

// ---------------------------------------------------------------------------
// Snapshots

/// One observed system snapshot: raw feature rows, their ingested manifold
/// points (filled by the harness), and the observed interaction graph.
struct Snapshot {
  double t = 0.0;
  std::vector<Vec> features;  // n x F raw rows
  std::vector<Vec> points;    // n manifold points (after ingest)
  GraphTopology topo;
  Vec weights;

  void validate() const {
    if (!std::isfinite(t)) throw DomainError("snapshot: non-finite timestamp");
    for (double w : weights) {
      if (!(w > 0.0)) throw DomainError("snapshot: weights must be positive");
    }
    if (weights.size() != topo.edges.size())
      throw DomainError("snapshot: weight/edge mismatch");
  }
};

// ---------------------------------------------------------------------------
// Operations

/// Sinusoidal time encoding: [t]_{2i} = sin(t / 10000^{2i/d}),
/// [t]_{2i+1} = cos(t / 10000^{2i/d}).
inline Vec time_encode(double t, int d_time) {
  if (d_time < 2 || d_time % 2 != 0) throw DomainError("time_encode: d_time must be even, >= 2");
  Vec enc(static_cast<size_t>(d_time));
  for (int i = 0; 2 * i < d_time; ++i) {
    const double freq = t / std::pow(10000.0, (2.0 * i) / d_time);
    enc[2 * i] = std::sin(freq);
    enc[2 * i + 1] = std::cos(freq);
  }
  return enc;
}

/// Softmax attention over observed timestamps against the initial time.
template <class S>
VecX<S> temporal_attention(const std::vector<double>& times, double t_initial,
                           const VecX<S>& attn_w) {
  if (times.empty()) throw DomainError("temporal_attention: no observed times");
  if (attn_w.size() % 2 != 0) throw DomainError("temporal_attention: attn_w must have even size");
  const int d_time = static_cast<int>(attn_w.size()) / 2;
  const Vec enc_init = time_encode(t_initial, d_time);
  VecX<S> logits;
  logits.reserve(times.size());
  for (double t : times) {
    const Vec key = concat(time_encode(t, d_time), enc_init);
    S logit(0.0);
    for (size_t i = 0; i < key.size(); ++i) logit = logit + attn_w[i] * S(key[i]);
    logits.push_back(logit);
  }
  return softmax(logits);
}

/// Gyro-transform with the woGyr fallback (tangent-space round trip).
template <class S>
VecX<S> feature_transform(const MatX<S>& W, const VecX<S>& z, const Curvature& k,
                          bool use_gyro) {
  if (use_gyro) return geo::gyro_transform(W, z, k);
  return geo::exp_map_origin(matvec(W, geo::log_map_origin(z, k)), k);
}

/// One manifold GCN layer: transform every point, then aggregate each node's
/// neighborhood (self included with weight 1) with the gyro-midpoint using
/// the row-normalized observed adjacency.
template <class S>
std::vector<VecX<S>> manifold_gcn_layer(const GraphTopology& topo, const Vec& edge_weights,
                                        const std::vector<VecX<S>>& points, const MatX<S>& W,
                                        const Curvature& k, bool use_gyro) {
  const int n = topo.num_nodes;
  if (static_cast<int>(points.size()) != n) throw DomainError("gcn: point/node mismatch");
  std::vector<VecX<S>> h(points.size());
  for (int i = 0; i < n; ++i) h[i] = feature_transform(W, points[i], k, use_gyro);

  std::vector<VecX<S>> out(points.size());
  for (int i = 0; i < n; ++i) {
    std::vector<VecX<S>> nbh = {h[i]};
    VecX<S> wts = {S(1.0)};  // mandatory self weight
    double total = 1.0;
    for (const auto& [e, j] : topo.incident[i]) {
      nbh.push_back(h[j]);
      wts.push_back(S(edge_weights[e]));
      total += edge_weights[e];
    }
    for (auto& w : wts) w = w / S(total);
    out[i] = geo::gyro_midpoint(nbh, wts, k);
  }
  return out;
}

/// Union edge set across a window of snapshots.
inline GraphTopology union_topology(const std::vector<Snapshot>& obs) {
  if (obs.empty()) throw DomainError("union_topology: empty window");
  std::set<std::pair<int, int>> union_edges;
  for (const Snapshot& s : obs)
    for (const Edge& e : s.topo.edges) union_edges.insert({e.i, e.j});
  std::vector<Edge> edges;
  for (const auto& [i, j] : union_edges) edges.push_back({i, j});
  return GraphTopology(obs.front().topo.num_nodes, std::move(edges));
}

template <class S>
struct InitialStateT {
  std::vector<VecX<S>> z;  // n latent manifold points
  GraphTopology topo;      // union edge set across the observed window
  std::vector<S> w;        // symmetrized per-edge initial weights
  // per-node softmax rows over that node's candidate set: (neighbor, weight)
  std::vector<std::vector<std::pair<int, S>>> w_rows;
};

using InitialState = InitialStateT<double>;

/// Encoder: per-snapshot manifold GCN, temporal-attention gyro-midpoint
/// across time, then distance-softmax initial edge weights over the union
/// edge set (all candidate pairs when dense_init is set). The softmax rows
/// are directed; the flow's undirected initial weight is the mean of the two
/// directions.
template <class S>
InitialStateT<S> encode_initial_state(const std::vector<Snapshot>& obs,
                                      const ParamsT<S>& params, const ModelConfig& cfg) {
  if (obs.empty()) throw DomainError("encode_initial_state: empty observation window");
  const Curvature k = cfg.curvature();
  const int n = obs.front().topo.num_nodes;
  for (const Snapshot& s : obs) {
    s.validate();
    if (s.topo.num_nodes != n) throw DomainError("encode_initial_state: node count changes");
    if (s.points.size() != static_cast<size_t>(n))
      throw DomainError("encode_initial_state: snapshot not ingested");
  }

  // per-snapshot GCN stack
  std::vector<std::vector<VecX<S>>> reps;  // time x node
  std::vector<double> times;
  for (const Snapshot& s : obs) {
    std::vector<VecX<S>> h(n);
    for (int i = 0; i < n; ++i) {
      h[i] = VecX<S>(s.points[i].size(), S(0.0));
      for (size_t c = 0; c < s.points[i].size(); ++c) h[i][c] = S(s.points[i][c]);
    }
    h = manifold_gcn_layer(s.topo, s.weights, h, params.encoder_W, k, cfg.use_gyro());
    for (const auto& W : params.encoder_hidden)
      h = manifold_gcn_layer(s.topo, s.weights, h, W, k, cfg.use_gyro());
    reps.push_back(std::move(h));
    times.push_back(s.t);
  }

  // temporal aggregation at t_initial = last observed time
  const VecX<S> alpha = temporal_attention(times, obs.back().t, params.attn_w);
  InitialStateT<S> init;
  init.z.resize(n);
  for (int i = 0; i < n; ++i) {
    std::vector<VecX<S>> pts;
    pts.reserve(reps.size());
    for (const auto& rep : reps) pts.push_back(rep[i]);
    init.z[i] = geo::gyro_midpoint(pts, alpha, k);
  }

  init.topo = union_topology(obs);

  // candidate sets per source node
  std::vector<std::vector<int>> candidates(n);
  if (cfg.dense_init) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j != i) candidates[i].push_back(j);
  } else {
    for (int i = 0; i < n; ++i)
      for (const auto& [e, j] : init.topo.incident[i]) candidates[i].push_back(j);
  }

  // directed softmax rows w_ij = exp(-d(z_i, z_j)) / sum_k exp(-d(z_i, z_k))
  init.w_rows.resize(n);
  for (int i = 0; i < n; ++i) {
    if (candidates[i].empty()) continue;
    VecX<S> logits;
    for (int j : candidates[i]) logits.push_back(-geo::distance(init.z[i], init.z[j], k));
    const VecX<S> row = softmax(logits);
    for (size_t c = 0; c < candidates[i].size(); ++c)
      init.w_rows[i].push_back({candidates[i][c], row[c]});
  }

  // undirected edge weights: mean of the two directed entries
  init.w.assign(init.topo.edges.size(), S(0.0));
  for (size_t e = 0; e < init.topo.edges.size(); ++e) {
    const Edge& ed = init.topo.edges[e];
    S acc(0.0);
    int found = 0;
    for (const auto& [j, w] : init.w_rows[ed.i])
      if (j == ed.j) { acc = acc + w; ++found; }
    for (const auto& [j, w] : init.w_rows[ed.j])
      if (j == ed.i) { acc = acc + w; ++found; }
    init.w[e] = acc / S(found > 0 ? found : 1);
    if (value_of(init.w[e]) <= 0.0)
      throw NumericError("encode_initial_state: vanished initial weight");
  }
  return init;
}

/// GAT vector field: tangent lift of the state, two (configurable) attention
/// layers, tanh between layers, linear output. Aggregation coefficients come
/// from the evolving flow weights (row-normalized, self weight 1) or from
/// learned attention, per config.
template <class S>
std::vector<VecX<S>> vector_field(const GraphTopology& topo, const std::vector<S>& w,
                                  const std::vector<VecX<S>>& z, const ParamsT<S>& params,
                                  const ModelConfig& cfg) {
  const Curvature k = cfg.curvature();
  const int n = topo.num_nodes;
  std::vector<VecX<S>> v(n);
  for (int i = 0; i < n; ++i) v[i] = geo::log_map_origin(z[i], k);

  const int layers = static_cast<int>(params.gat_layers.size());
  for (int l = 0; l < layers; ++l) {
    const auto& layer = params.gat_layers[l];
    std::vector<VecX<S>> u(n);
    for (int i = 0; i < n; ++i) u[i] = matvec(layer.W, v[i]);

    std::vector<VecX<S>> next(n);
    for (int i = 0; i < n; ++i) {
      // neighborhood = self + incident nodes
      std::vector<int> nbr = {i};
      std::vector<int> via_edge = {-1};
      for (const auto& [e, j] : topo.incident[i]) {
        nbr.push_back(j);
        via_edge.push_back(e);
      }
      VecX<S> coef;
      if (cfg.gat_attention == GatAttention::flow_weights) {
        S total(1.0);
        coef.push_back(S(1.0));
        for (size_t c = 1; c < nbr.size(); ++c) {
          coef.push_back(w[via_edge[c]]);
          total = total + w[via_edge[c]];
        }
        for (auto& x : coef) x = x / total;
      } else {
        using std::tanh;
        VecX<S> logits;
        for (int j : nbr) {
          const VecX<S> pair = concat(u[i], u[j]);
          S e(0.0);
          for (size_t q = 0; q < pair.size(); ++q) e = e + layer.a[q] * pair[q];
          logits.push_back(tanh(e));
        }
        coef = softmax(logits);
      }
      VecX<S> agg(u[i].size(), S(0.0));
      for (size_t c = 0; c < nbr.size(); ++c) agg = add(agg, scale(u[nbr[c]], coef[c]));
      if (l + 1 < layers) {
        using std::tanh;
        for (auto& x : agg) x = tanh(x);
      }
      next[i] = std::move(agg);
    }
    v = std::move(next);
  }
  return v;
}

/// Constraint net f = sigmoid(MLP(Log_o(z_i) || Log_o(z_j))) in (0,1);
/// one tanh hidden layer of width d.
template <class S>
S constraint_f(const VecX<S>& zi, const VecX<S>& zj, const MlpT<S>& mlp, const Curvature& k) {
  using std::tanh;
  const VecX<S> in = concat(geo::log_map_origin(zi, k), geo::log_map_origin(zj, k));
  VecX<S> h = matvec(mlp.W1, in);
  for (size_t i = 0; i < h.size(); ++i) h[i] = tanh(h[i] + mlp.b1[i]);
  VecX<S> out = matvec(mlp.W2, h);
  return sigmoid(out[0] + mlp.b2[0]);
}

/// Decoder: row-wise manifold-preserving transform onto the output manifold.
template <class S>
std::vector<VecX<S>> decode(const std::vector<VecX<S>>& z, const MatX<S>& decoder_W,
                            const Curvature& k, bool use_gyro) {
  std::vector<VecX<S>> out(z.size());
  for (size_t i = 0; i < z.size(); ++i) out[i] = feature_transform(decoder_W, z[i], k, use_gyro);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint format: JSON with a config echo, the seed and the parameter
// tensors as nested arrays of 64-bit floats.

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"feature_dim", c.feature_dim},
                        {"d", c.latent_dim},
                        {"gat_layers", c.gat_layer_count},
                        {"mlp_hidden", c.mlp_hidden_layers},
                        {"encoder_layers", c.encoder_layers},
                        {"time_dim", c.time_dim},
                        {"lr", c.learning_rate},
                        {"kappa", c.kappa},
                        {"base_step", c.base_step},
                        {"epochs", c.epochs},
                        {"split_ratio", c.split_ratio},
                        {"ablation", to_string(c.ablation)},
                        {"gat_attention",
                         c.gat_attention == GatAttention::flow_weights ? "flow_weights" : "learned"},
                        {"dense_init", c.dense_init},
                        {"plain_euler", c.plain_euler}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.latent_dim = j.value("d", j.value("latent_dim", c.latent_dim));
  c.gat_layer_count = j.value("gat_layers", c.gat_layer_count);
  c.mlp_hidden_layers = j.value("mlp_hidden", c.mlp_hidden_layers);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  c.time_dim = j.value("time_dim", c.time_dim);
  c.learning_rate = j.value("lr", c.learning_rate);
  c.kappa = j.value("kappa", c.kappa);
  c.base_step = j.value("base_step", c.base_step);
  c.epochs = j.value("epochs", c.epochs);
  c.split_ratio = j.value("split_ratio", c.split_ratio);
  c.ablation = ablation_from_string(j.value("ablation", std::string("none")));
  const std::string att = j.value("gat_attention", std::string("flow_weights"));
  if (att == "flow_weights") c.gat_attention = GatAttention::flow_weights;
  else if (att == "learned") c.gat_attention = GatAttention::learned;
  else throw ParseError("unknown gat_attention: " + att);
  c.dense_init = j.value("dense_init", c.dense_init);
  c.plain_euler = j.value("plain_euler", c.plain_euler);
  c.validate();
  return c;
}

namespace detail {
inline nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat mat_from_json(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw ParseError("checkpoint: ragged matrix");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}
}  // namespace detail

inline void save_checkpoint(std::ostream& os, const ModelParams& p, const ModelConfig& cfg,
                            uint64_t seed) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["seed"] = seed;
  j["encoder_W"] = detail::mat_to_json(p.encoder_W);
  if (!p.encoder_hidden.empty()) {
    nlohmann::json hidden = nlohmann::json::array();
    for (const auto& m : p.encoder_hidden) hidden.push_back(detail::mat_to_json(m));
    j["encoder_hidden"] = std::move(hidden);
  }
  j["attn_w"] = p.attn_w;
  nlohmann::json gats = nlohmann::json::array();
  for (const auto& l : p.gat_layers)
    gats.push_back({{"W", detail::mat_to_json(l.W)}, {"a", l.a}});
  j["gat_layers"] = std::move(gats);
  j["mlp"] = {{"W1", detail::mat_to_json(p.mlp.W1)},
              {"b1", p.mlp.b1},
              {"W2", detail::mat_to_json(p.mlp.W2)},
              {"b2", p.mlp.b2}};
  j["decoder_W"] = detail::mat_to_json(p.decoder_W);
  os << j.dump(2) << "\n";
}

struct Checkpoint {
  ModelParams params;
  ModelConfig config;
  uint64_t seed = 0;
};

inline Checkpoint load_checkpoint(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  Checkpoint ck;
  ck.config = config_from_json(j.at("config"));
  ck.seed = j.at("seed").get<uint64_t>();
  ck.params.encoder_W = detail::mat_from_json(j.at("encoder_W"));
  if (j.contains("encoder_hidden"))
    for (const auto& m : j.at("encoder_hidden"))
      ck.params.encoder_hidden.push_back(detail::mat_from_json(m));
  ck.params.attn_w = j.at("attn_w").get<Vec>();
  for (const auto& l : j.at("gat_layers"))
    ck.params.gat_layers.push_back(
        {detail::mat_from_json(l.at("W")), l.at("a").get<Vec>()});
  ck.params.mlp = {detail::mat_from_json(j.at("mlp").at("W1")), j.at("mlp").at("b1").get<Vec>(),
                   detail::mat_from_json(j.at("mlp").at("W2")), j.at("mlp").at("b2").get<Vec>()};
  ck.params.decoder_W = detail::mat_from_json(j.at("decoder_W"));
  return ck;
}

}  // namespace pioneer::nn
