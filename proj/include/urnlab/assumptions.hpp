#pragma once

#include "urnlab/addition.hpp"
#include "urnlab/common.hpp"
#include "urnlab/urn.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>

namespace urnlab {

struct AssumptionCheck {
  std::optional<bool> pass;  // nullopt = inconclusive, never a silent pass
  double statistic = std::numeric_limits<double>::quiet_NaN();
  std::string detail;
};

struct AssumptionReport {
  std::map<std::string, AssumptionCheck> checks;

  bool all_pass() const {
    for (const auto& [_, c] : checks)
      if (!c.pass.has_value() || !*c.pass) return false;
    return true;
  }
};

// Auditable predicates behind the convergence theory: nonnegative additions,
// unit column sums of the compensator, bounded column second moments, and a
// compensator-to-limit convergence diagnostic.
inline AssumptionReport audit_assumptions(const AdditionRuleModel& model,
                                          const DrawingRule& rule, int samples,
                                          std::uint64_t master_seed = 1) {
  AssumptionReport rep;
  int d = model.dim();
  Rng rng(master_seed, 0xA0D17);
  ModelSession session;
  session.reset(model);

  if (samples < 10) {
    AssumptionCheck inconclusive;
    inconclusive.detail = "fewer than 10 samples requested";
    rep.checks["a1_nonnegative_additions"] = inconclusive;
    rep.checks["a1_balanced_compensator"] = inconclusive;
    rep.checks["a2_column_second_moment"] = inconclusive;
    rep.checks["a3_compensator_limit"] = inconclusive;
    return rep;
  }

  double min_entry = std::numeric_limits<double>::infinity();
  double max_colsum_gap = 0.0;
  Vec colnorm2 = Vec::Zero(d);
  for (int s = 0; s < samples; ++s) {
    Mat H = compensator(model, session, s + 1);
    max_colsum_gap = std::max(max_colsum_gap, costochastic_gap(H));
    Mat D;
    try {
      D = sample_addition(model, session, rng, s + 1);
    } catch (const Error& e) {
      AssumptionCheck fail;
      fail.pass = false;
      fail.detail = std::string("sampler failed: ") + e.what();
      rep.checks["a1_nonnegative_additions"] = fail;
      return rep;
    }
    min_entry = std::min(min_entry, D.minCoeff());
    for (int j = 0; j < d; ++j)
      colnorm2(j) += D.col(j).squaredNorm() / double(samples);
  }

  {
    AssumptionCheck c;
    c.statistic = min_entry;
    c.pass = min_entry >= 0.0;
    c.detail = "min sampled entry of D over " + std::to_string(samples) +
               " samples";
    rep.checks["a1_nonnegative_additions"] = c;
  }
  {
    AssumptionCheck c;
    c.statistic = max_colsum_gap;
    c.pass = max_colsum_gap <= 1e-12;
    c.detail = "max |column sum - 1| of the compensator H_n";
    rep.checks["a1_balanced_compensator"] = c;
  }
  {
    AssumptionCheck c;
    c.statistic = colnorm2.maxCoeff();
    c.pass = std::isfinite(c.statistic);
    c.detail = "max_j empirical E||D^{.j}||^2 (finiteness check)";
    rep.checks["a2_column_second_moment"] = c;
  }

  // A3: ||H_n - H|| along a short simulated run; only the finance model has
  // a genuinely moving compensator.
  {
    AssumptionCheck c;
    if (model.kind() == AdditionRuleModel::Kind::Identity ||
        model.kind() == AdditionRuleModel::Kind::DeterministicBalanced) {
      c.statistic = 0.0;
      c.pass = true;
      c.detail = "H_n = H exactly for this model";
    } else if (model.kind() == AdditionRuleModel::Kind::Custom) {
      c.statistic =
          (model.compensator()(samples) - model.limit_H()).norm();
      c.pass = c.statistic < 0.1;
      c.detail = "||H_n - H|| at n = " + std::to_string(samples);
    } else if (samples < 100) {
      c.detail = "need >= 100 samples for the convergence diagnostic";
    } else {
      ModelSession sess;
      sess.reset(model);
      UrnState state{Vec::Ones(d)};
      Rng traj_rng(master_seed, 0xA3);
      double hdist = std::numeric_limits<double>::quiet_NaN();
      for (int s = 0; s < samples; ++s) {
        auto [next, rec] = step(state, rule, model, sess, traj_rng);
        state = next;
      }
      hdist = (compensator(model, sess, samples) - model.limit_H()).norm();
      c.statistic = hdist;
      c.pass = hdist < 0.1;
      c.detail = "||H_n - H|| after " + std::to_string(samples) + " steps";
    }
    rep.checks["a3_compensator_limit"] = c;
  }
  return rep;
}

}  // namespace urnlab
