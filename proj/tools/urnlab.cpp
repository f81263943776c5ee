// urnlab: simulate reinforced urn dynamics, solve the mean-field equilibria,
// predict fluctuation regimes and verify them by Monte Carlo.

#include "urnlab/cli.hpp"
#include "urnlab/urnlab.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace urnlab;
using cli::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  int threads = 0;
};

json inline_or_config(const CommonOpts& opts, json inline_cfg) {
  if (!opts.config_path.empty()) {
    json cfg = cli::load_config(opts.config_path);
    // Inline flags override file values.
    for (auto it = inline_cfg.begin(); it != inline_cfg.end(); ++it)
      if (!it.value().is_null()) cfg[it.key()] = it.value();
    return cfg;
  }
  inline_cfg["schema_version"] = 1;
  json clean;
  for (auto it = inline_cfg.begin(); it != inline_cfg.end(); ++it)
    if (!it.value().is_null()) clean[it.key()] = it.value();
  return clean;
}

void emit(const json& report, const std::string& out_dir,
          const std::string& filename, const json& config,
          std::uint64_t seed) {
  if (out_dir.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  DirLock lock{fs::path(out_dir)};
  atomic_write_file(fs::path(out_dir) / filename, report.dump(2) + "\n");
  atomic_write_file(fs::path(out_dir) / "manifest.json",
                    make_manifest(filename, config, seed).dump(2) + "\n");
}

int cmd_simulate(const json& cfg) {
  cli::validate_keys(cfg,
                     {"schema_version", "rule", "model", "y0", "horizon",
                      "runs", "seed", "checkpoints", "out_dir", "threads",
                      "random_y0"},
                     "simulate config");
  DrawingRule rule = cli::parse_rule(cfg.value("rule", json{{"f", "identity"}}));
  Vec y0 = cli::parse_vec(cfg.at("y0"), "y0");
  AdditionRuleModel model =
      cli::parse_model(cfg.value("model", json{{"kind", "identity"}}),
                       int(y0.size()));
  long long horizon = cfg.at("horizon").get<long long>();
  int runs = cfg.value("runs", 1);
  std::uint64_t seed = cfg.value("seed", 0ULL);
  std::string out_dir = cfg.value("out_dir", "");
  if (out_dir.empty()) throw cli::config_error("simulate needs out_dir");

  BatchSpec spec;
  spec.runs = runs;
  spec.horizon = horizon;
  spec.master_seed = seed;
  spec.checkpoints = cli::parse_checkpoints(cfg.value("checkpoints", json()),
                                            horizon);
  spec.rule = rule;
  spec.model = model;
  spec.y0 = y0;
  spec.randomize_y0 = cfg.value("random_y0", false);
  spec.threads = cfg.value("threads", 0);

  DirLock lock{fs::path(out_dir)};
  BatchResult batch = run_batch(spec);

  if (runs == 1) {
    Rng rng(seed, 0);
    RecordingPolicy policy;
    policy.checkpoints = spec.checkpoints;
    Vec start = spec.y0;
    if (spec.randomize_y0) {
      double tr = start.sum();
      Vec e(start.size());
      double tot = 0.0;
      for (int i = 0; i < e.size(); ++i)
        tot += (e(i) = -std::log(1.0 - rng.uniform()));
      start = tr * e / tot;
    }
    Trajectory t =
        run_trajectory(UrnState(start), rule, model, horizon, rng, policy);
    atomic_write_file(fs::path(out_dir) / "trajectory.csv", trajectory_csv(t));
  }
  atomic_write_file(fs::path(out_dir) / "finals.csv", finals_csv(batch));
  for (int r = 0; r < std::min(runs, 64); ++r) {
    Trajectory t;
    t.ns = batch.checkpoint_ns;
    t.ytilde = batch.paths[r];
    t.nfreq.assign(batch.checkpoint_ns.size(), Vec());
    t.final_state.Y = batch.final_ytilde[r];
    t.final_state.tr_y0 = batch.tr_y0;
    std::ostringstream os;
    os << "n";
    for (int i = 1; i <= batch.dim; ++i) os << ",y" << i;
    os << "\n";
    for (size_t c = 0; c < batch.checkpoint_ns.size(); ++c) {
      os << batch.checkpoint_ns[c];
      for (int i = 0; i < batch.dim; ++i)
        os << ',' << fmt_g17(batch.paths[r][c](i));
      os << "\n";
    }
    atomic_write_file(fs::path(out_dir) / "paths" /
                          ("run_" + std::to_string(r) + ".csv"),
                      os.str());
  }
  atomic_write_file(fs::path(out_dir) / "manifest.json",
                    make_manifest("simulate", cfg, seed).dump(2) + "\n");
  return 0;
}

int cmd_equilibria(const json& cfg) {
  cli::validate_keys(cfg,
                     {"schema_version", "f", "p1", "p2", "H", "starts", "seed",
                      "out_dir"},
                     "equilibria config");
  ShapeFunction f = cli::parse_shape(cfg.value("f", "identity"));
  EquilibriumReport rep;
  if (cfg.contains("H")) {
    MeanFieldModel model(f, cli::parse_mat(cfg.at("H"), "H"));
    rep = equilibria_general(model, cfg.value("starts", 32),
                             cfg.value("seed", 20240901ULL));
  } else {
    rep = equilibria_2d(f, cfg.at("p1").get<double>(),
                        cfg.at("p2").get<double>());
  }
  emit(to_json(rep), cfg.value("out_dir", ""), "equilibria.json", cfg,
       cfg.value("seed", 0ULL));
  return 0;
}

int cmd_scan(const json& cfg) {
  cli::validate_keys(cfg,
                     {"schema_version", "p1", "p2", "alpha", "out_dir", "out"},
                     "scan config");
  double p1 = cfg.at("p1").get<double>();
  double p2 = cfg.at("p2").get<double>();
  AlphaScan scan =
      scan_alpha(p1, p2, cli::parse_grid(cfg.at("alpha").get<std::string>()));
  std::string out_dir = cfg.value("out_dir", "");
  if (out_dir.empty()) {
    std::cout << scan_csv(scan);
    return 0;
  }
  DirLock lock{fs::path(out_dir)};
  atomic_write_file(fs::path(out_dir) / "scan.csv", scan_csv(scan));
  atomic_write_file(fs::path(out_dir) / "scan.json",
                    to_json(scan).dump(2) + "\n");
  atomic_write_file(fs::path(out_dir) / "manifest.json",
                    make_manifest("scan", cfg, 0).dump(2) + "\n");
  return 0;
}

int cmd_clt(const json& cfg) {
  cli::validate_keys(cfg,
                     {"schema_version", "f", "p1", "p2", "model", "runs",
                      "horizon", "seed", "eta", "threads", "out_dir"},
                     "clt config");
  ShapeFunction f = cli::parse_shape(cfg.value("f", "identity"));
  double p1 = cfg.at("p1").get<double>();
  double p2 = cfg.at("p2").get<double>();
  json model_cfg = cfg.value("model", json{{"kind", "bernoulli_finance"},
                                           {"p", {p1, p2}}});
  AdditionRuleModel model = cli::parse_model(model_cfg, 2);
  require(model.dim() == 2, "config.invalid", "clt covers d = 2");
  require((model.limit_H() - MeanFieldModel::two_color(f, p1, p2).H)
                  .cwiseAbs()
                  .maxCoeff() < 1e-9,
          "config.invalid", "model limit H must match (p1, p2)");

  NoiseModel noise =
      model.kind() == AdditionRuleModel::Kind::Identity
          ? NoiseModel::identity_urn(2)
      : model.kind() == AdditionRuleModel::Kind::BernoulliFinance
          ? NoiseModel::finance(model.p())
          : NoiseModel::deterministic(model.fixed_matrix());

  EquilibriumReport eq = equilibria_2d(f, p1, p2);
  json predictions = json::array();
  json check_report, rate_report;
  for (const auto& pt : eq.points) {
    if (pt.stability != Stability::Attractive) continue;
    CltPrediction pred =
        predict_clt(f, p1, p2, noise, pt.y(0), cfg.value("eta", 0.05));
    predictions.push_back(to_json(pred));
    int runs = cfg.value("runs", 0);
    if (runs <= 0) continue;
    BatchSpec spec;
    spec.runs = runs;
    spec.horizon = cfg.value("horizon", 100000LL);
    spec.master_seed = cfg.value("seed", 0ULL);
    spec.rule = DrawingRule::skewed_frequency(f);
    spec.model = model;
    spec.y0 = Vec::Ones(2);
    spec.threads = cfg.value("threads", 0);
    if (pred.regime.regime == Regime::Clt && check_report.is_null()) {
      spec.checkpoints = {spec.horizon};
      check_report = to_json(clt_check(run_batch(spec), pred));
    } else if (pred.regime.regime == Regime::AsRate && rate_report.is_null()) {
      rate_report =
          to_json(rate_regression(run_batch(spec), pred.y_star, pred.lambda));
    }
  }
  json out = {{"predictions", predictions}};
  if (!check_report.is_null()) out["clt_check"] = check_report;
  if (!rate_report.is_null()) out["rate_regression"] = rate_report;
  emit(out, cfg.value("out_dir", ""), "clt.json", cfg, cfg.value("seed", 0ULL));
  return 0;
}

int cmd_polya(const json& cfg) {
  cli::validate_keys(cfg,
                     {"schema_version", "mode", "f", "y0", "runs", "horizon",
                      "seed", "I", "d", "threads", "out_dir", "endpoint_eps"},
                     "polya config");
  std::string mode = cfg.value("mode", "dirichlet");
  std::string out_dir = cfg.value("out_dir", "");
  std::uint64_t seed = cfg.value("seed", 0ULL);

  if (mode == "dirichlet") {
    Vec y0 = cli::parse_vec(cfg.at("y0"), "y0");
    DirichletReport rep = dirichlet_limit_check(
        DrawingRule::skewed_frequency(ShapeFunction::identity()),
        AdditionRuleModel::identity(int(y0.size())), y0,
        cfg.value("runs", 10000), cfg.value("horizon", 10000LL), seed,
        cfg.value("threads", 0));
    emit(to_json(rep), out_dir, "dirichlet.json", cfg, seed);
    return 0;
  }
  if (mode == "trap") {
    TrapQuery q;
    q.f = cli::parse_shape(cfg.value("f", "identity"));
    for (const auto& v : cfg.at("I")) q.I.push_back(v.get<int>());
    q.d = cfg.value("d", 2);
    // 1-based colors in configs
    for (int& i : q.I) i -= 1;
    TrapVerdict v = trap_exclusion(q);
    emit(json{{"verdict", trap_verdict_name(v)}}, out_dir, "trap.json", cfg,
         seed);
    return 0;
  }
  if (mode == "bandit") {
    ShapeFunction f = cli::parse_shape(cfg.value("f", "identity"));
    Vec y0 = cli::parse_vec(cfg.at("y0"), "y0");
    long long horizon = cfg.value("horizon", 10000LL);
    Rng rng(seed, 0);
    RecordingPolicy policy;
    policy.checkpoints = geometric_checkpoints(horizon);
    policy.record_full_path = true;
    Trajectory t = run_trajectory(UrnState(y0),
                                  DrawingRule::skewed_frequency(f),
                                  AdditionRuleModel::identity(int(y0.size())),
                                  horizon, rng, policy);
    BanditMartingale bm = bandit_martingale_diagnostic(t, f);
    json series = json::array();
    for (long long n : t.ns) {
      size_t i = size_t(n - 1);
      series.push_back({{"n", n},
                        {"Ln", bm.Ln[i]},
                        {"h_tilde", bm.h_tilde[i]},
                        {"bound_proxy", bm.bound_proxy[i]}});
    }
    emit(json{{"kappa_d", bm.kappa_d}, {"series", series}}, out_dir,
         "bandit.json", cfg, seed);
    return 0;
  }
  if (mode == "endpoints") {
    // Per-run endpoint classification against the e~_I equilibria.
    ShapeFunction f = cli::parse_shape(cfg.value("f", "identity"));
    Vec y0 = cli::parse_vec(cfg.at("y0"), "y0");
    int d = int(y0.size());
    BatchSpec spec;
    spec.runs = cfg.value("runs", 500);
    spec.horizon = cfg.value("horizon", 100000LL);
    spec.master_seed = seed;
    spec.checkpoints = {spec.horizon};
    spec.rule = DrawingRule::skewed_frequency(f);
    spec.model = AdditionRuleModel::identity(d);
    spec.y0 = y0;
    spec.threads = cfg.value("threads", 0);
    BatchResult batch = run_batch(spec);
    std::vector<Vec> attractors;
    std::vector<std::string> labels;
    for (int i = 0; i < d; ++i) {
      attractors.push_back(subset_barycenter(d, {i}));
      labels.push_back("e" + std::to_string(i + 1));
    }
    attractors.push_back(uniform_simplex(d));
    labels.push_back("barycenter");
    std::string csv =
        endpoints_csv(batch, attractors, labels, cfg.value("endpoint_eps", 0.02));
    if (out_dir.empty()) {
      std::cout << csv;
    } else {
      DirLock lock{fs::path(out_dir)};
      atomic_write_file(fs::path(out_dir) / "endpoints.csv", csv);
      atomic_write_file(fs::path(out_dir) / "manifest.json",
                        make_manifest("polya", cfg, seed).dump(2) + "\n");
    }
    return 0;
  }
  throw cli::config_error(
      "polya mode must be dirichlet | trap | bandit | endpoints");
}

int cmd_finance(const json& cfg) {
  cli::validate_keys(cfg,
                     {"schema_version", "p", "f", "y0", "random_y0", "horizon",
                      "runs", "seed", "threads", "out_dir"},
                     "finance config");
  PerformanceModel pm(cli::parse_vec(cfg.at("p"), "p"));
  ShapeFunction f = cli::parse_shape(cfg.value("f", "sqrt"));
  long long horizon = cfg.value("horizon", 100000LL);
  int runs = cfg.value("runs", 1);
  std::uint64_t seed = cfg.value("seed", 0ULL);
  std::string out_dir = cfg.value("out_dir", "");
  if (out_dir.empty()) throw cli::config_error("finance needs out_dir");
  Vec y0 = cfg.contains("y0") ? cli::parse_vec(cfg.at("y0"), "y0")
                              : Vec(Vec::Ones(pm.p.size()));
  bool random_y0 = cfg.value("random_y0", !cfg.contains("y0"));

  DirLock lock{fs::path(out_dir)};

  // Reference allocation run (run 0 of the batch) with full recording; the
  // stream position after drawing the random start matches the batch path.
  std::vector<long long> checks = geometric_checkpoints(horizon);
  json a5_series = json::array();
  {
    Rng rng(seed, 0);
    Vec start = y0;
    if (random_y0) {
      double tr = y0.sum();
      Vec e(y0.size());
      double tot = 0.0;
      for (int i = 0; i < e.size(); ++i)
        tot += (e(i) = -std::log(1.0 - rng.uniform()));
      start = tr * e / tot;
    }
    AllocationTrajectory at = run_allocation(
        pm, DrawingRule::skewed_frequency(f), start, horizon, rng, checks);
    atomic_write_file(fs::path(out_dir) / "allocation.csv",
                      allocation_csv(at));
    // remainder-rate diagnostic n * v_n * ||H_n - H||^2 (v_n = 1); a numeric
    // series rather than a boolean, identically zero for d = 2.
    for (size_t i = 0; i < at.base.ns.size(); ++i)
      a5_series.push_back({{"n", at.base.ns[i]},
                           {"value", double(at.base.ns[i]) * at.hdist[i] *
                                         at.hdist[i]}});
  }

  BatchSpec spec;
  spec.runs = runs;
  spec.horizon = horizon;
  spec.master_seed = seed;
  spec.checkpoints = checks;
  spec.rule = DrawingRule::skewed_frequency(f);
  spec.model = AdditionRuleModel::bernoulli_finance(pm.p);
  spec.y0 = y0;
  spec.randomize_y0 = random_y0;
  spec.record_trial = true;
  spec.threads = cfg.value("threads", 0);
  BatchResult batch = run_batch(spec);
  atomic_write_file(fs::path(out_dir) / "finals.csv", finals_csv(batch));

  int pi_ok = 0;
  for (int r = 0; r < batch.runs(); ++r)
    if ((batch.final_pi[r] - pm.p).cwiseAbs().maxCoeff() < 0.03) ++pi_ok;
  json report = {
      {"limit_H", mat_to_json(limit_H(pm))},
      {"invariant_symmetry_gap", invariant_symmetry_gap(limit_H(pm))},
      {"pi_within_003", double(pi_ok) / batch.runs()},
      {"a5_diagnostic_n_vn_hdist2", a5_series},
      {"runs", batch.runs()}};
  atomic_write_file(fs::path(out_dir) / "report.json",
                    report.dump(2) + "\n");
  atomic_write_file(fs::path(out_dir) / "manifest.json",
                    make_manifest("finance", cfg, seed).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonlinear randomized urn toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;

  // simulate
  auto* sim = app.add_subcommand("simulate", "run urn trajectories to CSV");
  std::string sim_rule = "skewed_frequency", sim_f, sim_model, sim_y0,
              sim_p, sim_checkpoints;
  long long sim_horizon = 0;
  int sim_runs = 0;
  std::int64_t sim_seed = -1;
  sim->add_option("--config", opts.config_path, "JSON config path");
  sim->add_option("--rule", sim_rule, "skewed_frequency | skewed_raw");
  sim->add_option("--f", sim_f, "identity | power:<a> | sqrt | custom:<path>");
  sim->add_option("--model", sim_model,
                  "identity | bernoulli_finance | deterministic_balanced");
  sim->add_option("--p", sim_p, "finance success probabilities, e.g. 0.7,0.75");
  sim->add_option("--y0", sim_y0, "initial composition, e.g. 1,1");
  sim->add_option("--horizon", sim_horizon, "number of draws");
  sim->add_option("--runs", sim_runs, "number of runs");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--out-dir", opts.out_dir, "output directory");
  sim->add_option("--threads", opts.threads, "worker threads");

  // equilibria
  auto* eq = app.add_subcommand("equilibria", "solve h(y)=0 with stability");
  std::string eq_f = "identity";
  double eq_p1 = -1, eq_p2 = -1;
  eq->add_option("--config", opts.config_path, "JSON config path");
  eq->add_option("--f", eq_f, "shape spec");
  eq->add_option("--p1", eq_p1, "H(0,0)");
  eq->add_option("--p2", eq_p2, "H(1,1)");
  eq->add_option("--out-dir", opts.out_dir, "output directory");

  // scan
  auto* sc = app.add_subcommand("scan", "alpha phase-transition scan to CSV");
  std::string sc_alpha;
  double sc_p1 = -1, sc_p2 = -1;
  sc->add_option("--config", opts.config_path, "JSON config path");
  sc->add_option("--p1", sc_p1, "H(0,0)");
  sc->add_option("--p2", sc_p2, "H(1,1)");
  sc->add_option("--alpha", sc_alpha, "grid lo:hi:step");
  sc->add_option("--out-dir", opts.out_dir, "output directory");

  // clt
  auto* cl = app.add_subcommand("clt", "regime prediction and CLT check");
  std::string cl_f = "identity", cl_model;
  double cl_p1 = -1, cl_p2 = -1;
  long long cl_horizon = 0;
  int cl_runs = 0;
  std::int64_t cl_seed = -1;
  cl->add_option("--config", opts.config_path, "JSON config path");
  cl->add_option("--f", cl_f, "shape spec");
  cl->add_option("--p1", cl_p1, "H(0,0)");
  cl->add_option("--p2", cl_p2, "H(1,1)");
  cl->add_option("--model", cl_model, "identity | bernoulli_finance");
  cl->add_option("--runs", cl_runs, "Monte Carlo runs (0: prediction only)");
  cl->add_option("--horizon", cl_horizon, "Monte Carlo horizon");
  cl->add_option("--seed", cl_seed, "master seed");
  cl->add_option("--out-dir", opts.out_dir, "output directory");
  cl->add_option("--threads", opts.threads, "worker threads");

  // polya
  auto* po = app.add_subcommand("polya", "Dirichlet / trap / bandit reports");
  std::string po_mode = "dirichlet", po_f = "identity", po_y0, po_I;
  long long po_horizon = 0;
  int po_runs = 0, po_d = 0;
  std::int64_t po_seed = -1;
  po->add_option("--config", opts.config_path, "JSON config path");
  po->add_option("--mode", po_mode, "dirichlet | trap | bandit");
  po->add_option("--f", po_f, "shape spec");
  po->add_option("--y0", po_y0, "initial composition");
  po->add_option("--I", po_I, "trap subset, 1-based, e.g. 1 or 1,2");
  po->add_option("--d", po_d, "number of colors for trap queries");
  po->add_option("--runs", po_runs, "runs");
  po->add_option("--horizon", po_horizon, "horizon");
  po->add_option("--seed", po_seed, "master seed");
  po->add_option("--out-dir", opts.out_dir, "output directory");
  po->add_option("--threads", opts.threads, "worker threads");

  // finance
  auto* fi = app.add_subcommand("finance", "adaptive allocation experiment");
  std::string fi_p, fi_f = "sqrt", fi_y0;
  long long fi_horizon = 0;
  int fi_runs = 0;
  std::int64_t fi_seed = -1;
  bool fi_random_y0 = false;
  fi->add_option("--config", opts.config_path, "JSON config path");
  fi->add_option("--p", fi_p, "success probabilities, e.g. 0.7,0.75");
  fi->add_option("--f", fi_f, "shape spec");
  fi->add_option("--y0", fi_y0, "initial composition");
  fi->add_flag("--random-y0", fi_random_y0, "random simplex start per run");
  fi->add_option("--horizon", fi_horizon, "horizon");
  fi->add_option("--runs", fi_runs, "runs");
  fi->add_option("--seed", fi_seed, "master seed");
  fi->add_option("--out-dir", opts.out_dir, "output directory");
  fi->add_option("--threads", opts.threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  auto csv_list = [](const std::string& s) {
    json arr = json::array();
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) arr.push_back(std::stod(tok));
    return arr;
  };

  try {
    if (sim->parsed()) {
      json inl;
      if (!sim_f.empty()) inl["rule"] = {{"kind", sim_rule}, {"f", sim_f}};
      if (!sim_model.empty()) {
        json m = {{"kind", sim_model}};
        if (!sim_p.empty()) m["p"] = csv_list(sim_p);
        inl["model"] = m;
      }
      if (!sim_y0.empty()) inl["y0"] = csv_list(sim_y0);
      if (sim_horizon > 0) inl["horizon"] = sim_horizon;
      if (sim_runs > 0) inl["runs"] = sim_runs;
      if (sim_seed >= 0) inl["seed"] = sim_seed;
      if (!opts.out_dir.empty()) inl["out_dir"] = opts.out_dir;
      if (opts.threads > 0) inl["threads"] = opts.threads;
      return cmd_simulate(inline_or_config(opts, inl));
    }
    if (eq->parsed()) {
      json inl;
      if (!eq_f.empty()) inl["f"] = eq_f;
      if (eq_p1 >= 0) inl["p1"] = eq_p1;
      if (eq_p2 >= 0) inl["p2"] = eq_p2;
      if (!opts.out_dir.empty()) inl["out_dir"] = opts.out_dir;
      return cmd_equilibria(inline_or_config(opts, inl));
    }
    if (sc->parsed()) {
      json inl;
      if (sc_p1 >= 0) inl["p1"] = sc_p1;
      if (sc_p2 >= 0) inl["p2"] = sc_p2;
      if (!sc_alpha.empty()) inl["alpha"] = sc_alpha;
      if (!opts.out_dir.empty()) inl["out_dir"] = opts.out_dir;
      return cmd_scan(inline_or_config(opts, inl));
    }
    if (cl->parsed()) {
      json inl;
      if (!cl_f.empty()) inl["f"] = cl_f;
      if (cl_p1 >= 0) inl["p1"] = cl_p1;
      if (cl_p2 >= 0) inl["p2"] = cl_p2;
      if (!cl_model.empty()) {
        json m = {{"kind", cl_model}};
        if (cl_model == "bernoulli_finance") m["p"] = json{cl_p1, cl_p2};
        inl["model"] = m;
      }
      if (cl_runs > 0) inl["runs"] = cl_runs;
      if (cl_horizon > 0) inl["horizon"] = cl_horizon;
      if (cl_seed >= 0) inl["seed"] = cl_seed;
      if (!opts.out_dir.empty()) inl["out_dir"] = opts.out_dir;
      if (opts.threads > 0) inl["threads"] = opts.threads;
      return cmd_clt(inline_or_config(opts, inl));
    }
    if (po->parsed()) {
      json inl;
      inl["mode"] = po_mode;
      if (!po_f.empty()) inl["f"] = po_f;
      if (!po_y0.empty()) inl["y0"] = csv_list(po_y0);
      if (!po_I.empty()) {
        json arr = json::array();
        std::stringstream ss(po_I);
        std::string tok;
        while (std::getline(ss, tok, ',')) arr.push_back(std::stoi(tok));
        inl["I"] = arr;
      }
      if (po_d > 0) inl["d"] = po_d;
      if (po_runs > 0) inl["runs"] = po_runs;
      if (po_horizon > 0) inl["horizon"] = po_horizon;
      if (po_seed >= 0) inl["seed"] = po_seed;
      if (!opts.out_dir.empty()) inl["out_dir"] = opts.out_dir;
      if (opts.threads > 0) inl["threads"] = opts.threads;
      return cmd_polya(inline_or_config(opts, inl));
    }
    if (fi->parsed()) {
      json inl;
      if (!fi_p.empty()) inl["p"] = csv_list(fi_p);
      if (!fi_f.empty()) inl["f"] = fi_f;
      if (!fi_y0.empty()) inl["y0"] = csv_list(fi_y0);
      if (fi_random_y0) inl["random_y0"] = true;
      if (fi_horizon > 0) inl["horizon"] = fi_horizon;
      if (fi_runs > 0) inl["runs"] = fi_runs;
      if (fi_seed >= 0) inl["seed"] = fi_seed;
      if (!opts.out_dir.empty()) inl["out_dir"] = opts.out_dir;
      if (opts.threads > 0) inl["threads"] = opts.threads;
      return cmd_finance(inline_or_config(opts, inl));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code().rfind("config.", 0) == 0 ? 2 : 3;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
