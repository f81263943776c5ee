#pragma once

#include "urnlab/common.hpp"
#include "urnlab/montecarlo.hpp"
#include "urnlab/shape.hpp"
#include "urnlab/stats.hpp"
#include "urnlab/urn.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace urnlab {

// k-th moment of Beta(a,b): prod_{i=0}^{k-1} (a+i)/(a+b+i).
inline double beta_moment(int k, double a, double b) {
  require(k >= 1 && a > 0.0 && b > 0.0, "polya.moment", "need k>=1, a,b>0");
  double v = 1.0;
  for (int i = 0; i < k; ++i) v *= (a + i) / (a + b + i);
  return v;
}

struct MomentRow {
  int k = 0;
  double empirical = 0.0;
  double expected = 0.0;
  double se = 0.0;
  bool pass = false;  // within 3 standard errors
};

struct DirichletReport {
  std::vector<std::vector<MomentRow>> marginals;  // per color, k = 1..4
  double ks_statistic = std::numeric_limits<double>::quiet_NaN();
  double ks_p_value = std::numeric_limits<double>::quiet_NaN();
  bool moments_pass = true;
  bool ks_pass = true;
  int runs = 0;
};

// Simulates the identity model with uniform drawing and checks the limit law
// against Dirichlet(Y0) marginal moments; for d=2 additionally a KS test of
// Y~^1 against Beta(Y0^1, Y0^2).
inline DirichletReport dirichlet_limit_check(const DrawingRule& rule,
                                             const AdditionRuleModel& model,
                                             const Vec& y0, int runs,
                                             long long horizon,
                                             std::uint64_t master_seed,
                                             int threads = 0) {
  require(rule.kind == DrawKind::SkewedFrequency &&
              rule.f.kind() == ShapeFunction::Kind::Identity,
          "polya.scope", "the Dirichlet limit law needs f = identity");
  require(model.kind() == AdditionRuleModel::Kind::Identity, "polya.scope",
          "the Dirichlet limit law needs the identity addition model");
  require(y0.minCoeff() > 0.0, "polya.scope", "Y0 must be strictly positive");

  BatchSpec spec;
  spec.runs = runs;
  spec.horizon = horizon;
  spec.master_seed = master_seed;
  spec.checkpoints = {horizon};
  spec.rule = rule;
  spec.model = model;
  spec.y0 = y0;
  spec.record_frequencies = false;
  spec.threads = threads;
  BatchResult batch = run_batch(spec);

  int d = int(y0.size());
  double tr0 = y0.sum();
  DirichletReport rep;
  rep.runs = runs;
  for (int i = 0; i < d; ++i) {
    std::vector<MomentRow> rows;
    std::vector<double> xs(runs);
    for (int r = 0; r < runs; ++r) xs[r] = batch.final_ytilde[r](i);
    for (int k = 1; k <= 4; ++k) {
      MomentRow row;
      row.k = k;
      row.expected = beta_moment(k, y0(i), tr0 - y0(i));
      std::vector<double> pk(runs);
      for (int r = 0; r < runs; ++r) pk[r] = std::pow(xs[r], k);
      stats::Moments m = stats::moments(pk);
      row.empirical = m.mean;
      row.se = m.sd / std::sqrt(double(runs));
      row.pass = std::abs(row.empirical - row.expected) <= 3.0 * row.se;
      rep.moments_pass = rep.moments_pass && row.pass;
      rows.push_back(row);
    }
    rep.marginals.push_back(std::move(rows));
  }
  if (d == 2) {
    std::vector<double> xs(runs);
    for (int r = 0; r < runs; ++r) xs[r] = batch.final_ytilde[r](0);
    auto ks = stats::ks_test(xs, [&](double x) {
      return stats::beta_cdf(x, y0(0), y0(1));
    });
    rep.ks_statistic = ks.statistic;
    rep.ks_p_value = ks.p_value;
    rep.ks_pass = ks.p_value > 0.01;
  }
  return rep;
}

enum class TrapVerdict { Excluded, CriticalExcluded, NotExcluded };

inline const char* trap_verdict_name(TrapVerdict v) {
  switch (v) {
    case TrapVerdict::Excluded: return "excluded";
    case TrapVerdict::CriticalExcluded: return "critical_excluded";
    case TrapVerdict::NotExcluded: return "not_excluded";
  }
  return "?";
}

struct TrapQuery {
  std::vector<int> I;  // 0-based color subset
  int d = 0;
  ShapeFunction f = ShapeFunction::identity();
};

// Boundary-trap exclusion test for the point e~_I of the identity model.
// excluded: f'_r(0) > |I| f(1/|I|); critical_excluded (d=2 only):
// f'_r(0) = 1 and f'_l(1) + f''_r(0)/2 > 1. not_excluded means the test
// is silent, not that convergence to e~_I occurs.
inline TrapVerdict trap_exclusion(const TrapQuery& q) {
  require(!q.I.empty() && int(q.I.size()) < q.d, "polya.trap",
          "I must be a nonempty proper subset");
  for (int i : q.I)
    require(i >= 0 && i < q.d, "polya.trap", "color index out of range");
  double fr0 = q.f.right_deriv_0();
  require(!std::isnan(fr0), "polya.inconclusive",
          "shape function declares no right derivative at 0");
  double m = double(q.I.size());
  if (fr0 > m * q.f(1.0 / m)) return TrapVerdict::Excluded;
  if (q.d == 2 && std::abs(fr0 - 1.0) < 1e-12) {
    double fl1 = q.f.left_deriv_1();
    auto fr2 = q.f.right_second_deriv_0();
    require(!std::isnan(fl1) && fr2.has_value(), "polya.inconclusive",
            "critical test needs f'_l(1) and f''_r(0)");
    if (fl1 + *fr2 / 2.0 > 1.0) return TrapVerdict::CriticalExcluded;
  }
  return TrapVerdict::NotExcluded;
}

struct BanditMartingale {
  std::vector<long long> ns;
  std::vector<double> Ln;           // the compensated martingale values
  std::vector<double> h_tilde;      // drift factor along the path
  std::vector<double> bound_proxy;  // kappa_d / Y^1_n (shape only, not a bound)
  double kappa_d = 0.0;
};

// Reconstructs L~_n = Y~^1_n / prod_k (1 - h~(Y~_{k-1})/(k+Tr Y0)) along an
// identity-model trajectory recorded at every step, with
// h~(y) = 1 - f(y^1) / (y^1 Tr(f~(y))). The emitted kappa_d / Y^1_n series
// is the shape of the nonnegative-martingale second-moment bound, not a
// rigorous constant.
inline BanditMartingale bandit_martingale_diagnostic(const Trajectory& traj,
                                                     const ShapeFunction& f) {
  require(traj.model_kind == AdditionRuleModel::Kind::Identity, "polya.scope",
          "the bandit diagnostic needs the identity addition model");
  require(!traj.full_path.empty(), "polya.scope",
          "trajectory must record the full path (record_full_path)");
  int d = traj.dim();
  BanditMartingale out;
  double fd = f(1.0 / d);
  require(fd > 0.0, "polya.scope", "f(1/d) must be positive");
  out.kappa_d = double(d - 1) / (fd * fd);

  double log_prod = 0.0;  // log prod_{k<=n} (1 - h~(Y~_{k-1})/(k + Tr Y0))
  auto h_tilde_at = [&](const Vec& y) {
    double y1 = y(0);
    if (y1 <= 0.0)
      throw Error("polya.corruption",
                  "Y^1 hit zero under the identity model with Y0^1 > 0");
    double tr = 0.0;
    for (int i = 0; i < d; ++i) tr += f(y(i));
    return 1.0 - f(y1) / (y1 * tr);
  };

  const auto& path = traj.full_path;
  for (long long k = 1; k <= (long long)path.size(); ++k) {
    const Vec& before = k == 1 ? traj.initial_ytilde : path[k - 2];
    double h = h_tilde_at(before);
    log_prod += std::log1p(-h / (double(k) + traj.tr_y0));
    double y1 = path[k - 1](0);  // Y~^1_k
    out.ns.push_back(k);
    out.h_tilde.push_back(h);
    out.Ln.push_back(y1 / std::exp(log_prod));
    out.bound_proxy.push_back(out.kappa_d / (y1 * (double(k) + traj.tr_y0)));
  }
  return out;
}

}  // namespace urnlab
