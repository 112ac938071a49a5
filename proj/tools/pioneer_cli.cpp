// Command-line front end: dataset generation, training, prediction, entropy
// audits, curvature dumps and the geometry property suite.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error. Errors go to stderr
// as single machine-readable lines: "error: usage: ..." / "error: runtime: ...".

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pioneer/pioneer.hpp"

namespace {

using namespace pioneer;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open input file: " + path);
  return is;
}

data::TrajectoryDataset load_dataset_file(const std::string& path) {
  std::ifstream is = open_in(path);
  return data::load_dataset(is);
}

// ---------------------------------------------------------------------------

int cmd_generate(const std::string& system, int nodes, int steps, uint64_t seed, int sequences,
                 const std::string& out) {
  if (system != "spherical_flock" && system != "hyperbolic_diffusion" && system != "heat_graph")
    throw UsageError("unknown --system '" + system +
                     "' (expected spherical_flock|hyperbolic_diffusion|heat_graph)");
  if (nodes < 3 || steps < 4) throw UsageError("need --nodes >= 3 and --steps >= 4");
  if (sequences < 1) throw UsageError("need --sequences >= 1");
  data::GenerateOptions opt;
  opt.num_sequences = sequences;
  const data::TrajectoryDataset ds = data::generate(system, nodes, steps, seed, opt);
  std::ofstream os = open_out(out);
  data::save_dataset(os, ds);
  std::cout << "wrote " << out << " (" << sequences << " sequences, " << nodes << " nodes, "
            << steps << " snapshots)\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path, uint64_t seed,
              const std::string& out, std::string log_path) {
  data::TrajectoryDataset ds = load_dataset_file(data_path);
  nlohmann::json jcfg = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream is = open_in(config_path);
    try {
      is >> jcfg;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("config: ") + e.what());
    }
  }
  nn::ModelConfig cfg = nn::config_from_json(jcfg);
  cfg.feature_dim = ds.feature_dim;                   // always taken from the data
  if (!jcfg.contains("kappa")) cfg.kappa = ds.kappa;  // default to the data manifold
  cfg.validate();

  data::ingest(ds);
  const learn::TrainResult res = learn::train(ds.sequences, cfg, seed);
  for (const std::string& w : res.warnings) std::cerr << "warning: " << w << "\n";

  std::ofstream os = open_out(out);
  nn::save_checkpoint(os, res.params, cfg, seed);
  if (log_path.empty()) log_path = out + ".log.csv";
  std::ofstream ls = open_out(log_path);
  learn::write_train_log_csv(ls, res.log);

  std::cout << "epochs=" << res.log.size() << " first_loss=" << res.log.front().total_loss
            << " final_loss=" << res.log.back().total_loss << "\n";
  std::cout << "wrote " << out << " and " << log_path << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, int horizon,
                const std::string& out, const std::string& decoded_out, int sequence) {
  if (horizon < 1) throw UsageError("--horizon must be >= 1");
  std::ifstream ms = open_in(model_path);
  const nn::Checkpoint ck = nn::load_checkpoint(ms);
  data::TrajectoryDataset ds = load_dataset_file(data_path);
  if (ds.feature_dim != ck.config.feature_dim)
    throw DomainError("model/data feature dimension mismatch");
  data::ingest(ds);
  if (sequence < 0 || sequence >= static_cast<int>(ds.sequences.size()))
    throw UsageError("--sequence out of range");
  const auto& seq = ds.sequences[sequence];
  if (static_cast<int>(seq.size()) <= horizon)
    throw DomainError("horizon exceeds sequence length");

  const std::vector<nn::Snapshot> observed(seq.begin(), seq.end() - horizon);
  const Curvature k = ck.config.curvature();
  const nn::InitialState init = nn::encode_initial_state(observed, ck.params, ck.config);
  dyn::SystemState s0{observed.back().t, init.z, init.w};
  std::vector<double> times;
  for (auto it = seq.end() - horizon; it != seq.end(); ++it) times.push_back(it->t);
  const dyn::IntegratorConfig icfg{ck.config.base_step, 8};
  const auto states = dyn::integrate(s0, times, init.topo, ck.params, ck.config, icfg);

  std::ofstream os = open_out(out);
  dyn::write_trajectory_jsonl(os, states);
  if (!decoded_out.empty()) {
    std::ofstream ds_os = open_out(decoded_out);
    for (const auto& st : states) {
      const auto decoded = nn::decode(st.z, ck.params.decoder_W, k, ck.config.use_gyro());
      std::vector<Vec> rows;
      for (const Vec& p : decoded) rows.push_back(geo::log_map_origin(p, k));
      nlohmann::json j;
      j["t"] = st.t;
      j["Y"] = rows;
      ds_os << j.dump() << "\n";
    }
  }

  const data::EvalResult ev = data::evaluate(ck.params, ck.config, ds, horizon);
  std::cout << "model: mape=" << ev.model.mape << " rmse=" << ev.model.rmse
            << " horizon=" << ev.model.horizon << "\n";
  std::cout << "persistence: mape=" << ev.persistence.mape << " rmse=" << ev.persistence.rmse
            << " horizon=" << ev.persistence.horizon << "\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_audit(const std::string& data_path, const std::string& model_path,
              const std::string& mode, int steps, double dt, double f_const, double tol,
              int refine, int sequence, const std::string& out) {
  data::TrajectoryDataset ds = load_dataset_file(data_path);
  if (sequence < 0 || sequence >= static_cast<int>(ds.sequences.size()))
    throw UsageError("--sequence out of range");
  const auto& seq = ds.sequences[sequence];

  ent::MonotonicityReport report;
  double dt_used = dt;
  if (mode.empty()) {
    // audit the dataset's own weight trajectory
    std::vector<std::pair<double, WeightedGraph>> traj;
    for (const nn::Snapshot& s : seq) traj.push_back({s.t, WeightedGraph(s.topo, s.weights)});
    report = ent::audit(traj, tol);
  } else {
    dyn::FlowMode fm;
    if (mode == "constrained") fm = dyn::FlowMode::constrained;
    else if (mode == "canonical") fm = dyn::FlowMode::canonical;
    else throw UsageError("--mode must be constrained or canonical");
    const WeightedGraph g0(seq.front().topo, seq.front().weights);
    Vec f_vals(g0.weights.size(), f_const);
    if (!model_path.empty() && fm == dyn::FlowMode::constrained) {
      // constraint net of the trained model, evaluated at the encoded state
      std::ifstream ms = open_in(model_path);
      const nn::Checkpoint ck = nn::load_checkpoint(ms);
      data::ingest(ds);
      const nn::InitialState init =
          nn::encode_initial_state(ds.sequences[sequence], ck.params, ck.config);
      for (size_t e = 0; e < g0.topo.edges.size(); ++e) {
        const Edge& ed = g0.topo.edges[e];
        f_vals[e] =
            nn::constraint_f(init.z[ed.i], init.z[ed.j], ck.params.mlp, ck.config.curvature());
      }
    }
    const dyn::FlowAuditResult res = dyn::audit_flow(g0, fm, f_vals, steps, dt, tol, refine);
    report = res.report;
    dt_used = res.dt_used;
  }

  std::ofstream os = open_out(out);
  ent::write_audit_csv(os, report, tol);
  std::cout << "verdict=" << (report.verdict ? "true" : "false")
            << " violations=" << report.violations.size() << " dt=" << dt_used << "\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_curvature(const std::string& data_path, int snapshot, int sequence,
                  const std::string& out) {
  const data::TrajectoryDataset ds = load_dataset_file(data_path);
  if (sequence < 0 || sequence >= static_cast<int>(ds.sequences.size()))
    throw UsageError("--sequence out of range");
  const auto& seq = ds.sequences[sequence];
  if (snapshot < 0 || snapshot >= static_cast<int>(seq.size()))
    throw UsageError("--snapshot out of range");
  const WeightedGraph g(seq[snapshot].topo, seq[snapshot].weights);
  const Vec ricci = curv::forman_curvature(g);
  const Vec gdiag = curv::edge_ratio_sums(g);

  std::ofstream os = open_out(out);
  os << "i,j,w,curvature,g\n";
  char buf[128];
  for (size_t e = 0; e < g.topo.edges.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", g.topo.edges[e].i,
                  g.topo.edges[e].j, g.weights[e], ricci[e], gdiag[e]);
    os << buf;
  }
  std::cout << "ricci_total=" << curv::ricci_total(g) << " edges=" << g.topo.edges.size() << "\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

// geometry property suite: exit 0 iff all checks pass at the given curvature
int cmd_geomcheck(double kappa, int dim, int trials, uint64_t seed) {
  if (dim < 2) throw UsageError("--dim must be >= 2");
  if (trials < 1) throw UsageError("--trials must be >= 1");
  const Curvature k(kappa);
  Rng rng(seed);

  auto random_point = [&](double frac) {
    Vec x(dim);
    for (double& c : x) c = rng.uniform(-1.0, 1.0);
    const double n = std::sqrt(norm_sq(x)) + 1e-300;
    double target;
    if (k.hyperbolic()) target = rng.uniform(0.0, frac) / k.sqrt_abs();
    else if (k.spherical()) target = rng.uniform(0.0, 1.2 / k.sqrt_abs());
    else target = rng.uniform(0.0, 1.0);
    for (double& c : x) c *= target / n;
    return x;
  };

  int failures = 0;
  auto report = [&](const std::string& name, int bad) {
    std::cout << (bad == 0 ? "[pass] " : "[FAIL] ") << name
              << (bad > 0 ? " (" + std::to_string(bad) + " violations)" : "") << "\n";
    failures += bad;
  };

  int bad_identity = 0, bad_inverse = 0, bad_roundtrip = 0, bad_dist = 0, bad_gyro_id = 0,
      bad_domain = 0, bad_lorentz = 0, bad_midpoint = 0;
  Mat eye(dim, dim);
  for (int i = 0; i < dim; ++i) eye(i, i) = 1.0;
  const Vec zero(dim, 0.0);

  for (int t = 0; t < trials; ++t) {
    const Vec x = random_point(0.8), y = random_point(0.8);
    if (norm(sub(geo::mobius_add(zero, x, k), x)) > 1e-12) ++bad_identity;
    if (norm(geo::mobius_add(neg(x), x, k)) > 1e-10) ++bad_inverse;

    const Vec v = geo::log_map(x, y, k);
    const Vec back = geo::exp_map(x, v, k);
    if (norm(sub(back, y)) > 1e-8 * std::max(1.0, norm(y))) ++bad_roundtrip;

    if (std::abs(geo::distance(x, y, k) - geo::distance(y, x, k)) > 1e-10 ||
        geo::distance(x, x, k) > 1e-12)
      ++bad_dist;

    if (norm(sub(geo::gyro_transform(eye, x, k), x)) > 1e-10) ++bad_gyro_id;

    Mat W(dim, dim);
    for (double& c : W.data) c = rng.uniform(-2.0, 2.0);
    const Vec out = geo::gyro_transform(W, x, k);
    if (!geo::in_domain(out, k)) ++bad_domain;
    if (!k.flat() && norm(out) > 0.0) {
      if (std::abs(geo::lorentz_residual(geo::stereo_unproject(out, k), k)) > 1e-9) ++bad_lorentz;
    }

    const Vec m1 = geo::gyro_midpoint<double>({x, y}, Vec{0.3, 0.7}, k);
    const Vec m2 = geo::gyro_midpoint<double>({x, y}, Vec{0.6, 1.4}, k);
    if (norm(sub(m1, m2)) > 1e-12 || !geo::in_domain(m1, k)) ++bad_midpoint;
  }
  report("mobius left identity", bad_identity);
  report("mobius left inverse", bad_inverse);
  report("exp/log round trip", bad_roundtrip);
  report("distance symmetry/identity", bad_dist);
  report("gyro-transform identity", bad_gyro_id);
  report("gyro-transform domain", bad_domain);
  if (!k.flat()) report("lorentz membership", bad_lorentz);
  report("gyro-midpoint weight invariance", bad_midpoint);

  // continuity through kappa = 0 on unit-scale inputs
  int bad_cont = 0;
  const Curvature flat(0.0);
  for (double eps : {1e-6, -1e-6}) {
    const Curvature near_zero(eps);
    for (int t = 0; t < std::min(trials, 200); ++t) {
      Vec x(dim), y(dim);
      for (double& c : x) c = rng.uniform(-0.7, 0.7);
      for (double& c : y) c = rng.uniform(-0.7, 0.7);
      if (std::abs(geo::distance(x, y, near_zero) - geo::distance(x, y, flat)) > 1e-4) ++bad_cont;
      if (norm(sub(geo::mobius_add(x, y, near_zero), geo::mobius_add(x, y, flat))) > 1e-4)
        ++bad_cont;
      if (norm(sub(geo::exp_map(x, y, near_zero), geo::exp_map(x, y, flat))) > 1e-4) ++bad_cont;
    }
  }
  report("continuity through kappa=0", bad_cont);

  std::cout << (failures == 0 ? "all geometry properties hold" : "geometry property FAILURES")
            << " (kappa=" << kappa << ", dim=" << dim << ", trials=" << trials << ")\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pioneer: physics-informed Riemannian graph ODE toolkit"};
  app.require_subcommand(0, 1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic trajectory dataset");
  std::string g_system, g_out;
  int g_nodes = 10, g_steps = 20, g_sequences = 4;
  uint64_t g_seed = 0;
  gen->add_option("--system", g_system, "spherical_flock|hyperbolic_diffusion|heat_graph")
      ->required();
  gen->add_option("--nodes", g_nodes, "number of objects")->required();
  gen->add_option("--steps", g_steps, "snapshots per sequence")->required();
  gen->add_option("--seed", g_seed, "rng seed")->required();
  gen->add_option("--out", g_out, "output dataset JSON")->required();
  gen->add_option("--sequences", g_sequences, "sequences to generate (default 4)");

  // train
  auto* tr = app.add_subcommand("train", "train a model on a dataset");
  std::string t_data, t_config, t_out, t_log;
  uint64_t t_seed = 0;
  tr->add_option("--data", t_data, "dataset JSON")->required();
  tr->add_option("--config", t_config, "config JSON (defaults apply when omitted)");
  tr->add_option("--seed", t_seed, "rng seed")->required();
  tr->add_option("--out", t_out, "output model checkpoint")->required();
  tr->add_option("--log", t_log, "training log CSV (default <out>.log.csv)");

  // predict
  auto* pr = app.add_subcommand("predict", "roll a trained model forward");
  std::string p_model, p_data, p_out, p_decoded;
  int p_horizon = 1, p_sequence = 0;
  pr->add_option("--model", p_model, "model checkpoint")->required();
  pr->add_option("--data", p_data, "dataset JSON")->required();
  pr->add_option("--horizon", p_horizon, "snapshots to predict")->required();
  pr->add_option("--out", p_out, "trajectory JSONL")->required();
  pr->add_option("--decoded-out", p_decoded, "optional decoded-feature JSONL");
  pr->add_option("--sequence", p_sequence, "sequence index (default 0)");

  // audit-entropy
  auto* au = app.add_subcommand("audit-entropy", "audit entropy monotonicity");
  std::string a_data, a_model, a_mode, a_out;
  int a_steps = 200, a_refine = 3, a_sequence = 0;
  double a_dt = 1e-3, a_fconst = 0.5, a_tol = 1e-6;
  au->add_option("--data", a_data, "dataset JSON")->required();
  au->add_option("--model", a_model, "model checkpoint (constrained mode: f from its net)");
  au->add_option("--mode", a_mode, "constrained|canonical (omit to audit the data itself)");
  au->add_option("--steps", a_steps, "simulation steps (default 200)");
  au->add_option("--dt", a_dt, "simulation step size (default 1e-3)");
  au->add_option("--f-const", a_fconst, "constant f when no model is given (default 0.5)");
  au->add_option("--tol", a_tol, "per-step decrease tolerance (default 1e-6)");
  au->add_option("--refine", a_refine, "step-halving retries on violation (default 3)");
  au->add_option("--sequence", a_sequence, "sequence index (default 0)");
  au->add_option("--out", a_out, "audit CSV")->required();

  // curvature
  auto* cu = app.add_subcommand("curvature", "dump per-edge Forman curvature");
  std::string c_data, c_out;
  int c_snapshot = 0, c_sequence = 0;
  cu->add_option("--data", c_data, "dataset JSON")->required();
  cu->add_option("--snapshot", c_snapshot, "snapshot index")->required();
  cu->add_option("--sequence", c_sequence, "sequence index (default 0)");
  cu->add_option("--out", c_out, "curvature CSV")->required();

  // geomcheck
  auto* ge = app.add_subcommand("geomcheck", "run the geometry property suite");
  double ge_kappa = -1.0;
  int ge_dim = 16, ge_trials = 10000;
  uint64_t ge_seed = 12345;
  ge->add_option("--kappa", ge_kappa, "curvature")->required();
  ge->add_option("--dim", ge_dim, "dimension")->required();
  ge->add_option("--trials", ge_trials, "randomized trials")->required();
  ge->add_option("--seed", ge_seed, "rng seed (default 12345)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed())
      return cmd_generate(g_system, g_nodes, g_steps, g_seed, g_sequences, g_out);
    if (tr->parsed()) return cmd_train(t_data, t_config, t_seed, t_out, t_log);
    if (pr->parsed())
      return cmd_predict(p_model, p_data, p_horizon, p_out, p_decoded, p_sequence);
    if (au->parsed())
      return cmd_audit(a_data, a_model, a_mode, a_steps, a_dt, a_fconst, a_tol, a_refine,
                       a_sequence, a_out);
    if (cu->parsed()) return cmd_curvature(c_data, c_snapshot, c_sequence, c_out);
    if (ge->parsed()) return cmd_geomcheck(ge_kappa, ge_dim, ge_trials, ge_seed);
    std::cout << app.help();
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  }
}
