#pragma once

#include "urnlab/asymptotics.hpp"
#include "urnlab/common.hpp"
#include "urnlab/stats.hpp"
#include "urnlab/urn.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace urnlab {

inline int effective_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("URNLAB_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

struct BatchSpec {
  int runs = 1;
  long long horizon = 1;
  std::uint64_t master_seed = 0;
  std::vector<long long> checkpoints;  // defaults to geometric up to horizon
  DrawingRule rule;
  AdditionRuleModel model = AdditionRuleModel::identity(2);
  Vec y0;
  bool randomize_y0 = false;  // per-run uniform simplex start (same Tr as y0)
  bool record_frequencies = true;
  bool track_martingale = false;
  bool record_trial = false;
  int threads = 0;  // 0: URNLAB_THREADS or hardware concurrency

  void validate() const {
    require(runs >= 1, "batch.spec", "runs >= 1");
    require(horizon >= 1, "batch.spec", "horizon >= 1");
    require(y0.size() == model.dim(), "batch.spec", "y0/model dim mismatch");
    if (!checkpoints.empty())
      require(std::is_sorted(checkpoints.begin(), checkpoints.end()) &&
                  checkpoints.back() <= horizon && checkpoints.front() >= 1,
              "batch.spec", "checkpoints must be sorted and <= horizon");
  }
};

class PartialBatchError : public Error {
 public:
  PartialBatchError(int completed, const std::string& why)
      : Error("batch.partial",
              "batch aborted after " + std::to_string(completed) +
                  " completed runs: " + why),
        completed_(completed) {}
  int completed_runs() const { return completed_; }

 private:
  int completed_;
};

struct BatchResult {
  std::vector<long long> checkpoint_ns;
  std::vector<Vec> final_ytilde;           // per run
  std::vector<Vec> final_nfreq;            // per run
  std::vector<std::vector<Vec>> paths;     // per run, per checkpoint
  std::vector<Vec> final_pi;               // finance only
  std::vector<double> martingale_norm;     // ||M_n|| at horizon (optional)
  long long horizon = 0;
  double tr_y0 = 0.0;
  int dim = 0;

  int runs() const { return int(final_ytilde.size()); }
};

// Deterministic given master_seed regardless of thread count or execution
// order: run k always consumes stream (master_seed, k).
inline BatchResult run_batch(const BatchSpec& spec) {
  spec.validate();
  std::vector<long long> checks = spec.checkpoints.empty()
                                      ? geometric_checkpoints(spec.horizon)
                                      : spec.checkpoints;
  BatchResult out;
  out.checkpoint_ns = checks;
  out.horizon = spec.horizon;
  out.tr_y0 = spec.y0.sum();
  out.dim = spec.model.dim();
  out.final_ytilde.resize(spec.runs);
  out.final_nfreq.resize(spec.runs);
  out.paths.resize(spec.runs);
  bool finance =
      spec.model.kind() == AdditionRuleModel::Kind::BernoulliFinance;
  if (finance && spec.record_trial) out.final_pi.resize(spec.runs);
  if (spec.track_martingale) out.martingale_norm.resize(spec.runs);

  RecordingPolicy policy;
  policy.checkpoints = checks;
  policy.record_frequencies = spec.record_frequencies;
  policy.track_martingale = spec.track_martingale;

  std::atomic<int> next{0};
  std::atomic<int> completed{0};
  std::atomic<bool> failed{false};
  std::string error_msg;
  std::mutex error_mu;

  auto worker = [&]() {
    while (true) {
      int k = next.fetch_add(1);
      if (k >= spec.runs || failed.load()) return;
      try {
        Rng rng(spec.master_seed, std::uint64_t(k));
        Vec y0 = spec.y0;
        if (spec.randomize_y0) {
          double tr = spec.y0.sum();
          Vec e(spec.y0.size());
          double tot = 0.0;
          for (int i = 0; i < e.size(); ++i)
            tot += (e(i) = -std::log(1.0 - rng.uniform()));
          y0 = tr * e / tot;
        }
        Trajectory t = run_trajectory(UrnState(y0), spec.rule, spec.model,
                                      spec.horizon, rng, policy);
        out.final_ytilde[k] = t.ytilde.back();
        out.final_nfreq[k] =
            spec.record_frequencies ? t.nfreq.back() : Vec();
        out.paths[k] = std::move(t.ytilde);
        if (finance && spec.record_trial)
          out.final_pi[k] = t.final_trial.pi();
        if (spec.track_martingale)
          out.martingale_norm[k] = t.martingale_sum.norm();
        completed.fetch_add(1);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!failed.exchange(true)) error_msg = e.what();
        return;
      }
    }
  };

  int nthreads = std::min(effective_threads(spec.threads), spec.runs);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw PartialBatchError(completed.load(), error_msg);
  return out;
}

// Per-run scaled fluctuations s_n = a_n (Y~_n - y*) at the checkpoints, with
// a_n in {sqrt(n), sqrt(n/log n), n^lambda} picked by the regime.
struct FluctuationSample {
  std::vector<long long> ns;
  std::vector<std::vector<Vec>> s;  // [run][checkpoint]
  std::string scaling;
};

inline FluctuationSample fluctuation_samples(const BatchResult& batch,
                                             const Vec& y_star,
                                             const RegimeInfo& regime) {
  FluctuationSample out;
  out.ns = batch.checkpoint_ns;
  out.scaling = regime.regime == Regime::Clt      ? "sqrt(n)"
                : regime.regime == Regime::LogClt ? "sqrt(n/log n)"
                                                  : "n^lambda";
  out.s.resize(batch.runs());
  for (int r = 0; r < batch.runs(); ++r) {
    out.s[r].reserve(out.ns.size());
    for (size_t i = 0; i < out.ns.size(); ++i) {
      double n = double(out.ns[i]);
      double a = regime.regime == Regime::Clt ? std::sqrt(n)
                 : regime.regime == Regime::LogClt
                     ? std::sqrt(n / std::log(std::max(n, 2.0)))
                     : std::pow(n, regime.lambda);
      Vec v = a * (batch.paths[r][i] - y_star);
      require(v.allFinite(), "montecarlo.fluctuation",
              "non-finite fluctuation sample");
      out.s[r].push_back(std::move(v));
    }
  }
  return out;
}

struct CltCheckReport {
  double empirical_var = 0.0;
  double predicted_sigma2 = 0.0;
  double ratio = 0.0;
  double mean_proj = 0.0;
  stats::NormalityTest normality;
  int retained = 0;
  int excluded = 0;
  double scale_label = 1.0;  // a_n^2 normalization actually applied
};

// Fluctuation check at the final horizon: projects on the tangent direction
// (1,-1)/sqrt(2), scales by a_n per regime, compares the across-run variance
// with the predicted tangent sigma^2. Runs that selected a different
// attractor are excluded (the CLT is conditional on the convergence event).
inline CltCheckReport clt_check(const BatchResult& batch,
                                const CltPrediction& prediction,
                                double retention_radius = 0.1) {
  require(prediction.regime.regime == Regime::Clt ||
              prediction.regime.regime == Regime::LogClt,
          "montecarlo.regime", "clt_check needs a clt/log_clt prediction");
  require(batch.dim == 2, "montecarlo.scope", "tangent projection is d=2");
  double n = double(batch.horizon);
  double a2 = prediction.regime.regime == Regime::Clt ? n : n / std::log(n);
  std::vector<double> proj;
  proj.reserve(batch.final_ytilde.size());
  int excluded = 0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (const Vec& yt : batch.final_ytilde) {
    if ((yt - prediction.y_star).cwiseAbs().maxCoeff() > retention_radius) {
      ++excluded;
      continue;
    }
    double s = (yt(0) - prediction.y_star(0)) - (yt(1) - prediction.y_star(1));
    proj.push_back(std::sqrt(a2) * s * inv_sqrt2);
  }
  require(proj.size() >= 20, "montecarlo.samples",
          "too few retained runs for a variance check");
  CltCheckReport rep;
  stats::Moments m = stats::moments(proj);
  rep.empirical_var = m.var;
  rep.mean_proj = m.mean;
  rep.predicted_sigma2 = prediction.sigma2;
  rep.ratio = m.var / prediction.sigma2;
  rep.normality = stats::dagostino_k2(proj);
  rep.retained = int(proj.size());
  rep.excluded = excluded;
  rep.scale_label = a2;
  return rep;
}

struct RateReport {
  double median_slope = 0.0;
  double slope_q10 = 0.0;
  double slope_q90 = 0.0;
  std::vector<double> upsilon;       // n^lambda ||Y~_n - y*|| at horizon
  std::vector<double> upsilon_gap;   // n^(1-lambda) ||.||, the Dh-eigenvalue rate
  double frac_positive = 0.0;
  int excluded = 0;
  int retained = 0;
};

// Per-run decay-exponent fit of log ||Y~_n - y*|| against log n over the
// last two decades of (geometric) checkpoints.
inline RateReport rate_regression(const BatchResult& batch, const Vec& y_star,
                                  double lambda,
                                  double exclusion_radius = 0.1) {
  RegimeInfo info = classify_regime(lambda);
  require(info.regime == Regime::AsRate, "montecarlo.regime",
          "rate regression applies to the a.s.-rate regime (1/2 < lambda < 1)");
  require(batch.checkpoint_ns.size() >= 4, "montecarlo.checkpoints",
          "need geometric checkpoints");
  for (size_t i = 1; i < batch.checkpoint_ns.size(); ++i)
    require(batch.checkpoint_ns[i] > batch.checkpoint_ns[i - 1],
            "montecarlo.checkpoints", "checkpoints must increase");

  double n_hi = double(batch.horizon);
  double n_lo = n_hi / 100.0;
  RateReport rep;
  std::vector<double> slopes;
  int positive = 0;
  for (int r = 0; r < batch.runs(); ++r) {
    const auto& path = batch.paths[r];
    double final_dist = (batch.final_ytilde[r] - y_star).norm();
    if (final_dist > exclusion_radius) {
      ++rep.excluded;
      continue;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (size_t i = 0; i < batch.checkpoint_ns.size(); ++i) {
      double n = double(batch.checkpoint_ns[i]);
      if (n < n_lo) continue;
      double dist = (path[i] - y_star).norm();
      double lx = std::log(n), ly = std::log(std::max(dist, 1e-300));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++cnt;
    }
    require(cnt >= 3, "montecarlo.checkpoints",
            "need >= 3 checkpoints in the last two decades");
    slopes.push_back((double(cnt) * sxy - sx * sy) /
                     (double(cnt) * sxx - sx * sx));
    rep.upsilon.push_back(std::pow(n_hi, lambda) * final_dist);
    rep.upsilon_gap.push_back(std::pow(n_hi, 1.0 - lambda) * final_dist);
    if (final_dist > 0.0) ++positive;
  }
  require(!slopes.empty(), "montecarlo.samples", "no retained runs");
  rep.retained = int(slopes.size());
  rep.median_slope = stats::median(slopes);
  rep.slope_q10 = stats::quantile(slopes, 0.10);
  rep.slope_q90 = stats::quantile(slopes, 0.90);
  rep.frac_positive = double(positive) / double(rep.retained);
  return rep;
}

// Fraction of runs that end within eps of y_hat and stayed there over the
// late window (every checkpoint past horizon/2 inside the ball).
inline double trap_hit_fraction(const BatchResult& batch, const Vec& y_hat,
                                double eps) {
  int hits = 0;
  for (int r = 0; r < batch.runs(); ++r) {
    if ((batch.final_ytilde[r] - y_hat).norm() >= eps) continue;
    bool stayed = true;
    for (size_t i = 0; i < batch.checkpoint_ns.size(); ++i) {
      if (batch.checkpoint_ns[i] * 2 < batch.horizon) continue;
      if ((batch.paths[r][i] - y_hat).norm() >= eps) {
        stayed = false;
        break;
      }
    }
    if (stayed) ++hits;
  }
  return double(hits) / double(batch.runs());
}

struct FrequencyCheckReport {
  double max_deviation = 0.0;
  double frac_within = 0.0;
  int matched = 0;
  int unmatched = 0;
};

// Limit drawing-frequency check: final frequencies against f~(y*)/Tr(f~(y*)) of
// the attractor each run selected.
inline FrequencyCheckReport frequency_limit_check(
    const BatchResult& batch, const std::vector<Vec>& y_stars,
    const ShapeFunction& f, double tol = 0.03, double match_radius = 0.1) {
  require(!y_stars.empty(), "montecarlo.scope", "need at least one attractor");
  std::vector<Vec> limits;
  for (const Vec& ys : y_stars) {
    Vec fv = f_tilde(f, ys);
    limits.push_back(fv / fv.sum());
  }
  FrequencyCheckReport rep;
  int within = 0;
  for (int r = 0; r < batch.runs(); ++r) {
    int best = -1;
    double best_dist = match_radius;
    for (size_t a = 0; a < y_stars.size(); ++a) {
      double dist = (batch.final_ytilde[r] - y_stars[a]).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = int(a);
      }
    }
    if (best < 0) {
      ++rep.unmatched;
      continue;
    }
    ++rep.matched;
    double dev = (batch.final_nfreq[r] - limits[best]).cwiseAbs().maxCoeff();
    rep.max_deviation = std::max(rep.max_deviation, dev);
    if (dev < tol) ++within;
  }
  rep.frac_within = rep.matched > 0 ? double(within) / rep.matched : 0.0;
  return rep;
}

}  // namespace urnlab
