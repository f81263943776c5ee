#pragma once

#include "urnlab/addition.hpp"
#include "urnlab/common.hpp"
#include "urnlab/urn.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

namespace urnlab {

struct PerformanceModel {
  Vec p;

  explicit PerformanceModel(Vec p_) : p(std::move(p_)) {
    require(p.size() >= 2, "finance.model", "need at least two assets");
    for (int i = 0; i < p.size(); ++i)
      require(p(i) > 0.0 && p(i) < 1.0, "finance.model",
              "success probabilities must lie strictly in (0,1)");
  }
};

inline Mat sample_addition_matrix(const TrialState& trial, const Vec& T) {
  return finance_addition_matrix(trial, T);
}

inline Mat generating_matrix(const TrialState& trial,
                             const PerformanceModel& pm) {
  return finance_generating_matrix(trial, pm.p);
}

inline Mat limit_H(const PerformanceModel& pm) {
  return AdditionRuleModel::finance_limit_matrix(pm.p);
}

// H is symmetric with respect to its invariant measure; the similarity
// transform by diag(pi)^(-1/2) must therefore be symmetric. Returns the gap.
inline double invariant_symmetry_gap(const Mat& H) {
  require(is_costochastic(H, 1e-10), "finance.model", "H must be co-stochastic");
  int d = int(H.rows());
  // invariant measure: H pi = pi, pi > 0, sum pi = 1 (power iteration)
  Vec pi = Vec::Constant(d, 1.0 / d);
  for (int it = 0; it < 20000; ++it) {
    Vec next = H * pi;
    next /= next.sum();
    double delta = (next - pi).cwiseAbs().maxCoeff();
    pi = next;
    if (delta < 1e-15) break;
  }
  require(pi.minCoeff() > 0.0, "finance.model", "invariant measure not > 0");
  Mat S(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) S(i, j) = H(i, j) * std::sqrt(pi(j) / pi(i));
  return (S - S.transpose()).cwiseAbs().maxCoeff();
}

struct AllocationTrajectory {
  Trajectory base;
  std::vector<Vec> pi;          // estimator at checkpoints
  std::vector<double> hdist;    // ||H_n - H|| at checkpoints
  Vec p;
};

// Full coupled allocation run: reinforced drawing, Bernoulli performance
// sampling, estimator update, addition per the allocation matrices. Records
// Y~_n, Pi_n and ||H_n - H|| at the checkpoints.
inline AllocationTrajectory run_allocation(const PerformanceModel& pm,
                                           const DrawingRule& rule,
                                           const Vec& y0, long long horizon,
                                           Rng& rng,
                                           std::vector<long long> checkpoints =
                                               {}) {
  AdditionRuleModel model = AdditionRuleModel::bernoulli_finance(pm.p);
  if (checkpoints.empty()) checkpoints = geometric_checkpoints(horizon);

  // Same stepping core as run_trajectory, with estimator recording.
  UrnState state{y0};
  require(state.dim() == model.dim(), "finance.model", "y0/p dim mismatch");
  ModelSession session;
  session.reset(model);
  Mat H = model.limit_H();

  AllocationTrajectory out;
  out.p = pm.p;
  RecordingPolicy policy;
  policy.checkpoints = checkpoints;
  policy.record_frequencies = true;
  policy.record_trial = true;

  Trajectory t = run_trajectory(state, rule, model, horizon, rng, policy);
  out.base = std::move(t);
  out.pi = out.base.pi;
  out.hdist.reserve(out.pi.size());
  for (const Vec& pi_row : out.pi) {
    TrialState ts(model.dim());
    // rebuild a compensator from the recorded estimator row
    ts.S = pi_row;
    ts.N = Vec::Ones(model.dim());
    out.hdist.push_back((finance_generating_matrix(ts, pm.p) - H).norm());
  }
  return out;
}

}  // namespace urnlab
