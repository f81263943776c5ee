#pragma once

#include "urnlab/addition.hpp"
#include "urnlab/common.hpp"
#include "urnlab/rng.hpp"
#include "urnlab/shape.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace urnlab {

enum class DrawKind { SkewedFrequency, SkewedRaw };

// Conditional law of the drawn color: f applied to the normalized composition
// (skewed frequency) or to the raw ball masses (skewed raw).
struct DrawingRule {
  DrawKind kind = DrawKind::SkewedFrequency;
  ShapeFunction f = ShapeFunction::identity();

  static DrawingRule skewed_frequency(ShapeFunction f) {
    return DrawingRule{DrawKind::SkewedFrequency, std::move(f)};
  }

  static DrawingRule skewed_raw(ShapeFunction f) {
    require(f.unbounded_domain(), "rule.domain",
            "skewed_raw needs f defined on [0,inf); custom f must declare it");
    return DrawingRule{DrawKind::SkewedRaw, std::move(f)};
  }
};

struct UrnState {
  long long n = 0;
  Vec Y;
  double tr_y0 = 0.0;

  UrnState() = default;
  UrnState(Vec y0) : n(0), Y(std::move(y0)), tr_y0(Y.sum()) { validate(); }

  int dim() const { return int(Y.size()); }
  double total_weight() const { return double(n) + tr_y0; }
  Vec ytilde() const { return Y / total_weight(); }

  void validate() const {
    require(Y.size() >= 2, "urn.state", "need at least two colors");
    require(Y.minCoeff() >= 0.0, "urn.state", "ball masses must be >= 0");
    require(Y.maxCoeff() > 0.0, "urn.state", "no extinction: Y must be nonzero");
    require(tr_y0 > 0.0, "urn.state", "Tr(Y_0) must be positive");
  }
};

inline Vec draw_probabilities(const UrnState& state, const DrawingRule& rule) {
  int d = state.dim();
  double tot = state.total_weight();
  Vec w(d);
  for (int i = 0; i < d; ++i) {
    double arg = rule.kind == DrawKind::SkewedFrequency ? state.Y(i) / tot
                                                        : state.Y(i);
    w(i) = rule.f(arg);
  }
  double mass = w.sum();
  require(mass > 0.0, "rule.degenerate",
          "drawing rule assigns zero mass to every color");
  return w / mass;
}

// Per-step bookkeeping: the applied addition, the compensated martingale
// increment and the remainder against the limit matrix H.
struct StepRecord {
  int drawn_color = -1;           // 0-based
  Mat D;                          // sampled addition matrix
  Vec martingale_increment;       // D X - H_{n+1} fnorm
  Vec drawing_increment;          // X - fnorm
  Vec remainder;                  // (H_{n+1} - H) fnorm
};

namespace detail {

inline int pick_color(const double* w, int d, double mass, double u) {
  double target = u * mass;
  double acc = 0.0;
  for (int i = 0; i < d - 1; ++i) {
    acc += w[i];
    if (target < acc) return i;
  }
  return d - 1;
}

}  // namespace detail

// One draw/update transition. Randomness consumption is identical to the
// trajectory loop, so a single-step path reproduces batch runs exactly.
inline std::pair<UrnState, StepRecord> step(const UrnState& state,
                                            const DrawingRule& rule,
                                            const AdditionRuleModel& model,
                                            ModelSession& session, Rng& rng) {
  state.validate();
  require(model.dim() == state.dim(), "model.invalid", "dimension mismatch");
  int d = state.dim();
  Vec probs = draw_probabilities(state, rule);
  double u = rng.uniform();
  int j = detail::pick_color(probs.data(), d, 1.0, u);

  Mat D = sample_addition(model, session, rng, state.n + 1);
  require(D.minCoeff() >= 0.0, "model.contract",
          "sampled addition matrix has a negative entry");
  Mat H_next = compensator(model, session, state.n + 1);

  StepRecord rec;
  rec.drawn_color = j;
  rec.D = D;
  // fnorm is also the conditional mean of X given F_n.
  rec.drawing_increment = -probs;
  rec.drawing_increment(j) += 1.0;
  rec.martingale_increment = D.col(j) - H_next * probs;
  rec.remainder = (H_next - model.limit_H()) * probs;

  UrnState next = state;
  next.n += 1;
  next.Y += D.col(j);
  update_session(model, session, j);
  return {next, rec};
}

// Stateless-model convenience overload.
inline std::pair<UrnState, StepRecord> step(const UrnState& state,
                                            const DrawingRule& rule,
                                            const AdditionRuleModel& model,
                                            Rng& rng) {
  ModelSession session;
  session.reset(model);
  return step(state, rule, model, session, rng);
}

struct RecordingPolicy {
  std::vector<long long> checkpoints;  // sorted step indices
  bool record_frequencies = true;
  bool track_martingale = false;  // accumulate M_n = sum of increments
  bool record_full_path = false;  // keep every Y~_n row (diagnostics only)
  bool record_trial = false;      // finance estimator path at checkpoints
};

// Geometric checkpoint grid n = ceil(c * rho^k), deduplicated, horizon
// included; asymptotic diagnostics need log-spaced sampling.
inline std::vector<long long> geometric_checkpoints(long long horizon,
                                                    double c = 10.0,
                                                    double rho = 1.25) {
  require(horizon >= 1, "urn.horizon", "horizon must be >= 1");
  require(c >= 1.0 && rho > 1.0, "urn.checkpoints", "need c >= 1, rho > 1");
  std::vector<long long> out;
  for (double x = c; x < double(horizon); x *= rho) {
    long long n = (long long)std::ceil(x);
    if (n >= horizon) break;
    if (out.empty() || n > out.back()) out.push_back(n);
  }
  out.push_back(horizon);
  return out;
}

struct Trajectory {
  std::vector<long long> ns;       // checkpoint step indices
  std::vector<Vec> ytilde;         // normalized composition per checkpoint
  std::vector<Vec> nfreq;          // drawing frequencies N_n / n per checkpoint
  std::vector<Vec> pi;             // finance estimator per checkpoint (optional)
  std::vector<Vec> full_path;      // every step (optional, diagnostics)
  Vec martingale_sum;              // M_n at horizon (optional)
  Vec initial_ytilde;
  UrnState final_state;
  TrialState final_trial;          // finance only
  AdditionRuleModel::Kind model_kind = AdditionRuleModel::Kind::Identity;
  double tr_y0 = 0.0;

  int dim() const { return final_state.dim(); }
};

// Sequentially evolves one urn. Reproducible given the rng stream; safe to
// run concurrently with disjoint streams.
inline Trajectory run_trajectory(const UrnState& initial,
                                 const DrawingRule& rule,
                                 const AdditionRuleModel& model,
                                 long long horizon, Rng& rng,
                                 const RecordingPolicy& policy = {}) {
  initial.validate();
  require(horizon >= 1, "urn.horizon", "horizon must be >= 1");
  require(model.dim() == initial.dim(), "model.invalid", "dimension mismatch");

  const int d = initial.dim();
  const bool raw_rule = rule.kind == DrawKind::SkewedRaw;
  const bool finance =
      model.kind() == AdditionRuleModel::Kind::BernoulliFinance;
  const bool identity = model.kind() == AdditionRuleModel::Kind::Identity;
  const bool fixed = model.kind() == AdditionRuleModel::Kind::DeterministicBalanced;
  const ShapeFunction& f = rule.f;

  std::vector<long long> checks = policy.checkpoints;
  if (checks.empty()) checks = {horizon};
  require(std::is_sorted(checks.begin(), checks.end()) &&
              checks.front() >= 1 && checks.back() <= horizon,
          "urn.checkpoints", "checkpoints must be sorted and within horizon");

  ModelSession session;
  session.reset(model);

  std::vector<double> y(initial.Y.data(), initial.Y.data() + d);
  std::vector<double> w(d), mart(d, 0.0), probs(d);
  std::vector<long long> draw_count(d, 0);
  const double tr0 = initial.tr_y0;

  Trajectory out;
  out.tr_y0 = tr0;
  out.model_kind = model.kind();
  out.initial_ytilde = initial.ytilde();
  out.ns.reserve(checks.size());
  if (policy.record_full_path) out.full_path.reserve(size_t(horizon) + 1);

  size_t ci = 0;
  for (long long n = 0; n < horizon; ++n) {
    const double tot = double(n) + tr0;
    double mass = 0.0;
    if (raw_rule) {
      for (int i = 0; i < d; ++i) mass += (w[i] = f(y[i]));
    } else {
      const double inv = 1.0 / tot;
      for (int i = 0; i < d; ++i) mass += (w[i] = f(y[i] * inv));
    }
    require(mass > 0.0, "rule.degenerate",
            "drawing rule assigns zero mass to every color");
    const int j = detail::pick_color(w.data(), d, mass, rng.uniform());
    draw_count[j] += 1;

    if (identity) {
      y[j] += 1.0;
      if (policy.track_martingale) {
        for (int i = 0; i < d; ++i) mart[i] -= w[i] / mass;
        mart[j] += 1.0;
      }
    } else if (finance) {
      for (int i = 0; i < d; ++i)
        session.t_sample(i) = rng.bernoulli(model.p()(i)) ? 1.0 : 0.0;
      const Vec pi = session.trial.pi();
      const double ptot = pi.sum();
      const double tj = session.t_sample(j);
      const double denom = ptot - pi(j);
      for (int i = 0; i < d; ++i)
        y[i] += (i == j) ? tj : pi(i) * (1.0 - tj) / denom;
      if (policy.track_martingale) {
        Mat H = finance_generating_matrix(session.trial, model.p());
        for (int i = 0; i < d; ++i) {
          double applied = (i == j) ? tj : pi(i) * (1.0 - tj) / denom;
          double comp = 0.0;
          for (int k = 0; k < d; ++k) comp += H(i, k) * w[k] / mass;
          mart[i] += applied - comp;
        }
      }
      session.trial.S(j) += tj;
      session.trial.N(j) += 1.0;
    } else if (fixed) {
      const Mat& D = model.fixed_matrix();
      for (int i = 0; i < d; ++i) y[i] += D(i, j);
      if (policy.track_martingale) {
        for (int i = 0; i < d; ++i) {
          double comp = 0.0;
          for (int k = 0; k < d; ++k) comp += D(i, k) * w[k] / mass;
          mart[i] += D(i, j) - comp;
        }
      }
    } else {
      Mat D = model.sampler()(rng, n + 1);
      require(D.minCoeff() >= 0.0, "model.contract",
              "sampled addition matrix has a negative entry");
      for (int i = 0; i < d; ++i) y[i] += D(i, j);
      if (policy.track_martingale) {
        Mat H = model.compensator()(n + 1);
        for (int i = 0; i < d; ++i) {
          double comp = 0.0;
          for (int k = 0; k < d; ++k) comp += H(i, k) * w[k] / mass;
          mart[i] += D(i, j) - comp;
        }
      }
    }

    const long long done = n + 1;
    const double tot_next = double(done) + tr0;
    if (policy.record_full_path) {
      Vec row(d);
      for (int i = 0; i < d; ++i) row(i) = y[i] / tot_next;
      out.full_path.push_back(std::move(row));
    }
    if (ci < checks.size() && done == checks[ci]) {
      out.ns.push_back(done);
      Vec yt(d);
      for (int i = 0; i < d; ++i) yt(i) = y[i] / tot_next;
      out.ytilde.push_back(std::move(yt));
      if (policy.record_frequencies) {
        Vec nf(d);
        for (int i = 0; i < d; ++i) nf(i) = double(draw_count[i]) / double(done);
        out.nfreq.push_back(std::move(nf));
      }
      if (policy.record_trial && finance) out.pi.push_back(session.trial.pi());
      ++ci;
    }
  }

  out.final_state.n = horizon;
  out.final_state.Y = Eigen::Map<const Vec>(y.data(), d);
  out.final_state.tr_y0 = tr0;
  if (finance) out.final_trial = session.trial;
  if (policy.track_martingale)
    out.martingale_sum = Eigen::Map<const Vec>(mart.data(), d);
  return out;
}

}  // namespace urnlab
