#pragma once

// Coupled integration of the manifold ODE and the constrained Ricci flow.
//
// The state advances with chart Euler: tangent coordinates V = Log_o(Z) are
// integrated in the origin chart and mapped back through Exp_o, which keeps
// every iterate on the manifold without parallel transport. Weights advance
// in log space, w' = w exp(dt (R - e^f)), the exact solution of the frozen-
// coefficient linear flow over one substep; positivity is preserved by
// construction. Curvature and the constraint net are re-evaluated every
// substep.

#include <cmath>
#include <ostream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pioneer/autodiff.hpp"
#include "pioneer/core.hpp"
#include "pioneer/curvature.hpp"
#include "pioneer/entropy.hpp"
#include "pioneer/geometry.hpp"
#include "pioneer/graph.hpp"
#include "pioneer/nn.hpp"

namespace pioneer::dyn {

template <class S>
struct SystemStateT {
  double t = 0.0;
  std::vector<VecX<S>> z;  // n manifold points
  std::vector<S> w;        // per-edge positive weights
};
using SystemState = SystemStateT<double>;

struct IntegratorConfig {
  double base_step = 0.01;
  int max_halvings = 8;  // chart-overflow substep halving budget (kappa > 0)
};

namespace detail {

// One raw Euler substep; may throw RangeOverflowError on kappa > 0 chart
// overflow, which the caller resolves by halving.
template <class S>
SystemStateT<S> euler_substep(const SystemStateT<S>& s, double dt, const GraphTopology& topo,
                              const nn::ParamsT<S>& params, const nn::ModelConfig& cfg) {
  using std::exp;
  const Curvature k = cfg.curvature();
  SystemStateT<S> out;
  out.t = s.t + dt;

  // weight update from the state at the start of the substep
  switch (cfg.ablation) {
    case nn::Ablation::woEvo:
      out.w = s.w;  // frozen structure
      break;
    case nn::Ablation::woRic: {
      // dw/dt = f alone; additive Euler (f > 0 keeps weights positive)
      out.w = s.w;
      for (size_t e = 0; e < topo.edges.size(); ++e) {
        const Edge& ed = topo.edges[e];
        const S f = nn::constraint_f(s.z[ed.i], s.z[ed.j], params.mlp, k);
        out.w[e] = out.w[e] + S(dt) * f;
      }
      break;
    }
    case nn::Ablation::woCon: {
      // canonical flow, no features
      const std::vector<S> r = curv::forman_curvature(topo, s.w);
      out.w = s.w;
      for (size_t e = 0; e < out.w.size(); ++e) {
        if (cfg.plain_euler)
          out.w[e] = out.w[e] - S(dt) * r[e] * out.w[e];
        else
          out.w[e] = out.w[e] * exp(S(-dt) * r[e]);
      }
      break;
    }
    default: {
      const std::vector<S> r = curv::forman_curvature(topo, s.w);
      out.w = s.w;
      for (size_t e = 0; e < out.w.size(); ++e) {
        const Edge& ed = topo.edges[e];
        const S f = nn::constraint_f(s.z[ed.i], s.z[ed.j], params.mlp, k);
        const S rate = r[e] - exp(f);
        if (cfg.plain_euler)
          out.w[e] = out.w[e] + S(dt) * rate * out.w[e];
        else
          out.w[e] = out.w[e] * exp(S(dt) * rate);
      }
      break;
    }
  }
  for (const S& w : out.w) {
    if (!(value_of(w) > 0.0))
      throw NumericError("coupled_step: weight left the positive cone");
  }

  // state update in the origin chart
  const std::vector<VecX<S>> field = nn::vector_field(topo, s.w, s.z, params, cfg);
  out.z.resize(s.z.size());
  for (size_t i = 0; i < s.z.size(); ++i) {
    VecX<S> v = geo::log_map_origin(s.z[i], k);
    v = add(v, scale(field[i], S(dt)));
    out.z[i] = geo::exp_map_origin(v, k);  // throws RangeOverflowError on overflow
  }
  return out;
}

}  // namespace detail

/// One coupled Euler step of size dt. On kappa > 0 chart overflow the step is
/// retried as two half steps, recursively, up to cfg.max_halvings; the range
/// error propagates once the budget is exhausted.
template <class S>
SystemStateT<S> coupled_step(const SystemStateT<S>& s, double dt, const GraphTopology& topo,
                             const nn::ParamsT<S>& params, const nn::ModelConfig& cfg,
                             int max_halvings = 8) {
  if (!(dt > 0.0)) throw DomainError("coupled_step: dt must be positive");
  try {
    return detail::euler_substep(s, dt, topo, params, cfg);
  } catch (const RangeOverflowError&) {
    if (max_halvings <= 0) throw;
    const SystemStateT<S> mid = coupled_step(s, dt / 2.0, topo, params, cfg, max_halvings - 1);
    return coupled_step(mid, dt / 2.0, topo, params, cfg, max_halvings - 1);
  }
}

/// Advances the coupled system to every requested time with fixed substeps of
/// size <= cfg.base_step (the last substep of each interval is shortened to
/// land exactly). Returns the state at each requested time; irregular spacing
/// is the expected case.
template <class S>
std::vector<SystemStateT<S>> integrate(const SystemStateT<S>& s0, const std::vector<double>& times,
                                       const GraphTopology& topo, const nn::ParamsT<S>& params,
                                       const nn::ModelConfig& cfg,
                                       const IntegratorConfig& icfg = {}) {
  if (!(icfg.base_step > 0.0)) throw DomainError("integrate: base_step must be positive");
  for (size_t i = 0; i + 1 < times.size(); ++i) {
    if (!(times[i] < times[i + 1])) throw DomainError("integrate: times must be strictly increasing");
  }
  if (!times.empty() && times.front() < s0.t - 1e-12)
    throw DomainError("integrate: first requested time precedes the initial state");

  std::vector<SystemStateT<S>> out;
  out.reserve(times.size());
  SystemStateT<S> cur = s0;
  for (double target : times) {
    const double span = target - cur.t;
    if (span > 1e-14) {
      const int substeps = static_cast<int>(std::ceil(span / icfg.base_step - 1e-12));
      const double h = span / substeps;
      for (int q = 0; q < substeps; ++q)
        cur = coupled_step(cur, h, topo, params, cfg, icfg.max_halvings);
    }
    cur.t = target;  // exact landing
    out.push_back(cur);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weight-only flow simulation for entropy audits.

enum class FlowMode { constrained, canonical };

/// Evolves edge weights alone under the constrained flow (fixed per-edge f
/// values) or the canonical flow. Emits the initial graph and one snapshot
/// per step at t = k dt. If the canonical flow blows up (weights leave
/// [1e-150, 1e150] or go non-finite) the trajectory is truncated at the last
/// finite snapshot.
inline std::vector<std::pair<double, WeightedGraph>> simulate_flow_only(
    const WeightedGraph& g0, FlowMode mode, const Vec& f_vals, int steps, double dt) {
  g0.validate();
  if (mode == FlowMode::constrained) {
    if (f_vals.size() != g0.weights.size())
      throw DomainError("simulate_flow_only: f/edge count mismatch");
    for (double f : f_vals) {
      if (!(f > 0.0 && f < 1.0))
        throw ContractViolation("simulate_flow_only: f outside (0,1)");
    }
  }
  if (steps < 0 || dt < 0.0) throw DomainError("simulate_flow_only: steps/dt must be non-negative");

  std::vector<std::pair<double, WeightedGraph>> traj;
  traj.reserve(static_cast<size_t>(steps) + 1);
  traj.push_back({0.0, g0});
  Vec w = g0.weights;
  for (int k = 1; k <= steps; ++k) {
    const Vec r = curv::forman_curvature(g0.topo, w);
    for (size_t e = 0; e < w.size(); ++e) {
      const double rate = mode == FlowMode::constrained ? r[e] - std::exp(f_vals[e]) : -r[e];
      w[e] *= std::exp(dt * rate);
    }
    bool ok = true;
    for (double x : w) {
      if (!std::isfinite(x) || x > 1e150 || x < 1e-150) ok = false;
    }
    if (!ok) break;
    traj.push_back({k * dt, WeightedGraph(g0.topo, w)});
  }
  return traj;
}

struct FlowAuditResult {
  ent::MonotonicityReport report;
  double dt_used = 0.0;
  int refinements = 0;
};

/// simulate + audit with discretization refinement: on violation the step is
/// halved (and the count doubled, covering the same span) up to max_retries
/// times before the report is returned. Refinement separates genuine
/// continuous-time decreases from Euler artifacts.
inline FlowAuditResult audit_flow(const WeightedGraph& g0, FlowMode mode, const Vec& f_vals,
                                  int steps, double dt, double tol, int max_retries = 3) {
  FlowAuditResult res;
  res.dt_used = dt;
  for (int attempt = 0;; ++attempt) {
    const auto traj = simulate_flow_only(g0, mode, f_vals, steps, res.dt_used);
    res.report = ent::audit(traj, tol);
    if (res.report.verdict || attempt >= max_retries) return res;
    res.dt_used /= 2.0;
    steps *= 2;
    res.refinements = attempt + 1;
  }
}

// ---------------------------------------------------------------------------
// Trajectory dump: JSON lines, one object per requested time.

inline void write_trajectory_jsonl(std::ostream& os, const std::vector<SystemState>& states) {
  for (const SystemState& s : states) {
    nlohmann::json j;
    j["t"] = s.t;
    j["Z"] = s.z;
    j["w"] = s.w;
    os << j.dump() << "\n";
  }
}

}  // namespace pioneer::dyn
