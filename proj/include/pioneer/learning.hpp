#pragma once

// Objective, reverse-mode gradients over the unrolled pipeline, Adam, and the
// training loop. Gradients come from replaying the identical forward code
// with tape-tracked parameters and unrolling the discrete Euler steps, so
// they are exact for the solver actually used. One Adam update per sequence;
// everything is deterministic in (data, config, seed).

#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pioneer/autodiff.hpp"
#include "pioneer/core.hpp"
#include "pioneer/dynamics.hpp"
#include "pioneer/geometry.hpp"
#include "pioneer/nn.hpp"

namespace pioneer::learn {

template <class S>
struct ObjectiveT {
  S total{0.0};
  S position_term{0.0};
  S weight_term{0.0};
};
using Objective = ObjectiveT<double>;

/// One prediction target, aligned to the flow's edge set: the observation's
/// manifold points plus (flow edge index, observed weight) pairs.
struct AlignedTarget {
  double t = 0.0;
  std::vector<Vec> points;
  std::vector<std::pair<int, double>> weights;
};

/// Builds aligned targets from observed snapshots. In strict mode an observed
/// edge missing from the flow topology is a misalignment (DomainError); the
/// lenient mode (used by train on datasets whose snapshot edge sets drift)
/// silently drops such edges.
inline std::vector<AlignedTarget> align_targets(const std::vector<nn::Snapshot>& observed,
                                                const GraphTopology& flow_topo, bool strict) {
  std::map<std::pair<int, int>, int> edge_index;
  for (size_t e = 0; e < flow_topo.edges.size(); ++e)
    edge_index[{flow_topo.edges[e].i, flow_topo.edges[e].j}] = static_cast<int>(e);
  std::vector<AlignedTarget> out;
  for (const nn::Snapshot& s : observed) {
    s.validate();
    if (s.points.size() != static_cast<size_t>(flow_topo.num_nodes))
      throw DomainError("align_targets: snapshot not ingested or node count differs");
    AlignedTarget tgt;
    tgt.t = s.t;
    tgt.points = s.points;
    for (size_t e = 0; e < s.topo.edges.size(); ++e) {
      const auto it = edge_index.find({s.topo.edges[e].i, s.topo.edges[e].j});
      if (it == edge_index.end()) {
        if (strict) throw DomainError("align_targets: observed edge missing from flow topology");
        continue;
      }
      tgt.weights.push_back({it->second, s.weights[e]});
    }
    out.push_back(std::move(tgt));
  }
  return out;
}

/// Eq.-style reconstruction objective: squared manifold distance between the
/// decoded outputs and the observed points, plus squared weight residuals
/// over the aligned edges. Both terms are reported separately.
template <class S>
ObjectiveT<S> loss(const std::vector<dyn::SystemStateT<S>>& pred,
                   const std::vector<std::vector<VecX<S>>>& decoded,
                   const std::vector<AlignedTarget>& targets, const Curvature& k) {
  if (pred.size() != targets.size() || decoded.size() != targets.size())
    throw DomainError("loss: prediction/target count mismatch");
  ObjectiveT<S> obj;
  for (size_t s = 0; s < targets.size(); ++s) {
    if (std::abs(pred[s].t - targets[s].t) > 1e-9)
      throw DomainError("loss: timestamp misalignment");
    if (decoded[s].size() != targets[s].points.size())
      throw DomainError("loss: node count mismatch");
    for (size_t i = 0; i < decoded[s].size(); ++i) {
      VecX<S> target(targets[s].points[i].size(), S(0.0));
      for (size_t c = 0; c < target.size(); ++c) target[c] = S(targets[s].points[i][c]);
      obj.position_term = obj.position_term + geo::distance_sq(decoded[s][i], target, k);
    }
    for (const auto& [e, w_obs] : targets[s].weights) {
      const S r = pred[s].w[e] - S(w_obs);
      obj.weight_term = obj.weight_term + r * r;
    }
  }
  obj.total = obj.position_term + obj.weight_term;
  return obj;
}

/// Spec-facing overload: strict alignment from raw snapshots.
template <class S>
ObjectiveT<S> loss(const std::vector<dyn::SystemStateT<S>>& pred,
                   const std::vector<std::vector<VecX<S>>>& decoded,
                   const std::vector<nn::Snapshot>& observed, const GraphTopology& flow_topo,
                   const Curvature& k) {
  return loss(pred, decoded, align_targets(observed, flow_topo, /*strict=*/true), k);
}

/// Full pipeline on one sequence: encode the observed window, integrate over
/// the target timestamps, decode, and score. Shared by training (S = Var)
/// and by plain evaluation (S = double).
template <class S>
ObjectiveT<S> sequence_objective(const std::vector<nn::Snapshot>& observed,
                                 const std::vector<AlignedTarget>& targets,
                                 const nn::ParamsT<S>& params, const nn::ModelConfig& cfg) {
  const nn::InitialStateT<S> init = nn::encode_initial_state(observed, params, cfg);
  dyn::SystemStateT<S> s0;
  s0.t = observed.back().t;
  s0.z = init.z;
  s0.w = init.w;
  std::vector<double> times;
  times.reserve(targets.size());
  for (const AlignedTarget& t : targets) times.push_back(t.t);
  const dyn::IntegratorConfig icfg{cfg.base_step, 8};
  const auto states = dyn::integrate(s0, times, init.topo, params, cfg, icfg);
  std::vector<std::vector<VecX<S>>> decoded;
  decoded.reserve(states.size());
  for (const auto& st : states)
    decoded.push_back(nn::decode(st.z, params.decoder_W, cfg.curvature(), cfg.use_gyro()));
  return loss(states, decoded, targets, cfg.curvature());
}

/// Reverse-mode gradient of the sequence objective with respect to every
/// parameter, by replaying the forward pass on the tape.
inline std::pair<Objective, nn::GradientSet> sequence_gradient(
    const std::vector<nn::Snapshot>& observed, const std::vector<AlignedTarget>& targets,
    const nn::ModelParams& params, const nn::ModelConfig& cfg, ad::Tape& tape) {
  tape.clear();
  nn::ParamsT<ad::Var> lifted = nn::lift(params, tape);
  const ObjectiveT<ad::Var> obj = sequence_objective(observed, targets, lifted, cfg);
  Objective value{obj.total.v, obj.position_term.v, obj.weight_term.v};
  if (!obj.total.tracked()) {
    // constant objective (e.g. no targets): zero gradients
    return {value, nn::map_params<double>(lifted, [](const ad::Var&) { return 0.0; })};
  }
  tape.backward(obj.total.id);
  return {value, nn::collect_gradients(lifted, tape)};
}

// ---------------------------------------------------------------------------
// Adam

struct OptimizerState {
  nn::GradientSet m;  // first moments, shape-matched
  nn::GradientSet v;  // second moments
  long step = 0;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline OptimizerState make_optimizer(const nn::ModelParams& params, double lr) {
  OptimizerState st;
  st.m = nn::map_params<double>(params, [](double) { return 0.0; });
  st.v = st.m;
  st.lr = lr;
  return st;
}

template <class S>
std::vector<VecX<S>*> tensor_list(nn::ParamsT<S>& p) {
  std::vector<VecX<S>*> out;
  nn::visit_tensors(p, [&](const std::string&, VecX<S>& t) { out.push_back(&t); });
  return out;
}

/// Standard bias-corrected Adam update, in place.
inline void adam_step(nn::ModelParams& params, nn::GradientSet grads, OptimizerState& st) {
  auto ps = tensor_list(params);
  auto gs = tensor_list(grads);
  auto ms = tensor_list(st.m);
  auto vs = tensor_list(st.v);
  if (ps.size() != gs.size()) throw DomainError("adam_step: gradient shape mismatch");
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (size_t k = 0; k < ps.size(); ++k) {
    if (ps[k]->size() != gs[k]->size()) throw DomainError("adam_step: tensor shape mismatch");
    for (size_t i = 0; i < ps[k]->size(); ++i) {
      double& m = (*ms[k])[i];
      double& v = (*vs[k])[i];
      const double g = (*gs[k])[i];
      m = st.beta1 * m + (1.0 - st.beta1) * g;
      v = st.beta2 * v + (1.0 - st.beta2) * g * g;
      (*ps[k])[i] -= st.lr * (m / bc1) / (std::sqrt(v / bc2) + st.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainLogRow {
  int epoch = 0;
  double total_loss = 0.0;
  double position_term = 0.0;
  double weight_term = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  nn::ModelParams params;
  std::vector<TrainLogRow> log;
  std::vector<std::string> warnings;
};

inline void write_train_log_csv(std::ostream& os, const std::vector<TrainLogRow>& log) {
  os << "epoch,total_loss,position_term,weight_term,wall_ms\n";
  char buf[160];
  for (const TrainLogRow& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.total_loss,
                  r.position_term, r.weight_term, r.wall_ms);
    os << buf;
  }
}

/// Trains on pre-ingested snapshot sequences: each sequence is split at
/// split_ratio into an observed window and a prediction window, scored with
/// the reconstruction objective, and followed by one Adam update. Sequences
/// with fewer than two snapshots are skipped with a warning.
inline TrainResult train(const std::vector<std::vector<nn::Snapshot>>& sequences,
                         const nn::ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  TrainResult result;
  result.params = nn::init_params(cfg, seed);
  OptimizerState opt = make_optimizer(result.params, cfg.learning_rate);

  // fixed split + target alignment per sequence, computed once
  struct Prepared {
    std::vector<nn::Snapshot> observed;
    std::vector<AlignedTarget> targets;
  };
  std::vector<Prepared> prepared;
  for (size_t q = 0; q < sequences.size(); ++q) {
    const auto& seq = sequences[q];
    if (seq.size() < 2) {
      result.warnings.push_back("sequence " + std::to_string(q) + " skipped: fewer than 2 snapshots");
      continue;
    }
    const int t_total = static_cast<int>(seq.size());
    int split = static_cast<int>(std::lround(t_total * cfg.split_ratio));
    split = std::max(1, std::min(t_total - 1, split));
    Prepared p;
    p.observed.assign(seq.begin(), seq.begin() + split);
    const std::vector<nn::Snapshot> future(seq.begin() + split, seq.end());
    // the union edge set of the observed window defines the flow topology
    p.targets = align_targets(future, nn::union_topology(p.observed), /*strict=*/false);
    prepared.push_back(std::move(p));
  }
  if (prepared.empty()) throw DomainError("train: no usable sequences");

  ad::Tape tape;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto tic = std::chrono::steady_clock::now();
    TrainLogRow row;
    row.epoch = epoch;
    for (const Prepared& p : prepared) {
      auto [obj, grads] = sequence_gradient(p.observed, p.targets, result.params, cfg, tape);
      row.total_loss += obj.total;
      row.position_term += obj.position_term;
      row.weight_term += obj.weight_term;
      adam_step(result.params, std::move(grads), opt);
    }
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - tic).count();
    result.log.push_back(row);
  }
  return result;
}

}  // namespace pioneer::learn
