#pragma once

#include "urnlab/common.hpp"
#include "urnlab/rng.hpp"

#include <functional>
#include <utility>

namespace urnlab {

// Success/selection counters of the adaptive allocation scheme; S0 = N0 = 1
// per asset so the estimator Pi = S/N starts defined.
struct TrialState {
  Vec S;
  Vec N;

  explicit TrialState(int d = 0) : S(Vec::Ones(d)), N(Vec::Ones(d)) {}

  Vec pi() const { return S.cwiseQuotient(N); }

  void validate() const {
    require(S.size() == N.size(), "finance.trial", "S/N size mismatch");
    for (int i = 0; i < S.size(); ++i) {
      require(N(i) >= 1.0 && S(i) >= 0.0 && S(i) <= N(i), "finance.trial",
              "trial state out of range");
    }
  }
};

// Sampler of the addition matrix D_{n+1} together with its conditional
// compensator H_{n+1} and the limit matrix H.
class AdditionRuleModel {
 public:
  enum class Kind { Identity, DeterministicBalanced, BernoulliFinance, Custom };

  // Per-step D sampler for custom models: (rng, step index) -> d x d matrix.
  using Sampler = std::function<Mat(Rng&, long long)>;
  // Conditional compensator for custom models: step index -> d x d matrix.
  using Compensator = std::function<Mat(long long)>;

  static AdditionRuleModel identity(int d) {
    AdditionRuleModel m;
    m.kind_ = Kind::Identity;
    m.d_ = d;
    m.limit_H_ = Mat::Identity(d, d);
    return m;
  }

  static AdditionRuleModel deterministic_balanced(Mat D) {
    require(D.rows() == D.cols() && D.rows() >= 2, "model.invalid",
            "addition matrix must be square, d >= 2");
    require(D.minCoeff() >= 0.0, "model.invalid",
            "addition matrix entries must be nonnegative");
    require(costochastic_gap(D) <= 1e-12, "model.invalid",
            "balanced addition matrix needs unit column sums");
    AdditionRuleModel m;
    m.kind_ = Kind::DeterministicBalanced;
    m.d_ = int(D.rows());
    m.fixed_ = D;
    m.limit_H_ = std::move(D);
    return m;
  }

  static AdditionRuleModel bernoulli_finance(Vec p) {
    require(p.size() >= 2, "model.invalid", "need at least two assets");
    for (int i = 0; i < p.size(); ++i)
      require(p(i) > 0.0 && p(i) < 1.0, "model.invalid",
              "success probabilities must lie in (0,1)");
    AdditionRuleModel m;
    m.kind_ = Kind::BernoulliFinance;
    m.d_ = int(p.size());
    m.p_ = std::move(p);
    m.limit_H_ = finance_limit_matrix(m.p_);
    return m;
  }

  static AdditionRuleModel custom(int d, Sampler sampler,
                                  Compensator compensator, Mat limit_H) {
    require(d >= 2, "model.invalid", "d >= 2");
    require(bool(sampler) && bool(compensator), "model.invalid",
            "custom model needs sampler and compensator");
    require(limit_H.rows() == d && limit_H.cols() == d, "model.invalid",
            "limit H dimension mismatch");
    AdditionRuleModel m;
    m.kind_ = Kind::Custom;
    m.d_ = d;
    m.sampler_ = std::move(sampler);
    m.compensator_ = std::move(compensator);
    m.limit_H_ = std::move(limit_H);
    return m;
  }

  Kind kind() const { return kind_; }
  int dim() const { return d_; }
  const Mat& limit_H() const { return limit_H_; }
  const Vec& p() const { return p_; }
  const Mat& fixed_matrix() const { return fixed_; }
  const Sampler& sampler() const { return sampler_; }
  const Compensator& compensator() const { return compensator_; }

  // Limit generating matrix of the adaptive allocation scheme:
  // diagonal p_j, off-diagonal p_i (1 - p_j) / sum_{k != j} p_k.
  static Mat finance_limit_matrix(const Vec& p) {
    int d = int(p.size());
    double tot = p.sum();
    Mat H(d, d);
    for (int j = 0; j < d; ++j) {
      double denom = tot - p(j);
      for (int i = 0; i < d; ++i)
        H(i, j) = (i == j) ? p(j) : p(i) * (1.0 - p(j)) / denom;
    }
    return H;
  }

 private:
  Kind kind_ = Kind::Identity;
  int d_ = 0;
  Mat fixed_;
  Vec p_;
  Sampler sampler_;
  Compensator compensator_;
  Mat limit_H_;
};

// Per-trajectory mutable companion of a model; never shared across runs.
struct ModelSession {
  TrialState trial;
  Vec t_sample;  // finance Bernoulli outcomes of the current step

  void reset(const AdditionRuleModel& m) {
    if (m.kind() == AdditionRuleModel::Kind::BernoulliFinance) {
      trial = TrialState(m.dim());
      t_sample = Vec::Zero(m.dim());
    } else {
      trial = TrialState(0);
      t_sample.resize(0);
    }
  }
};

// d x d addition matrix of the allocation scheme for given Bernoulli
// outcomes T and estimator state: diagonal T^j, off-diagonal
// Pi^i (1 - T^j) / sum_{k != j} Pi^k. Every column sums to 1.
inline Mat finance_addition_matrix(const TrialState& trial, const Vec& T) {
  trial.validate();
  Vec pi = trial.pi();
  int d = int(pi.size());
  require(T.size() == d, "finance.trial", "T dimension mismatch");
  double tot = pi.sum();
  Mat D(d, d);
  for (int j = 0; j < d; ++j) {
    double denom = tot - pi(j);
    require(denom > 0.0, "finance.trial", "degenerate estimator column");
    for (int i = 0; i < d; ++i)
      D(i, j) = (i == j) ? T(j) : pi(i) * (1.0 - T(j)) / denom;
  }
  return D;
}

// Conditional compensator H_{n+1} = E[D_{n+1} | F_n] of the allocation
// scheme: T replaced by its mean p, estimator entries kept.
inline Mat finance_generating_matrix(const TrialState& trial, const Vec& p) {
  trial.validate();
  Vec pi = trial.pi();
  int d = int(pi.size());
  require(p.size() == d, "finance.trial", "p dimension mismatch");
  double tot = pi.sum();
  Mat H(d, d);
  for (int j = 0; j < d; ++j) {
    double denom = tot - pi(j);
    for (int i = 0; i < d; ++i)
      H(i, j) = (i == j) ? p(j) : pi(i) * (1.0 - p(j)) / denom;
  }
  return H;
}

// Samples a full addition matrix, advancing the session identically to the
// lean trajectory path (same randomness consumption).
inline Mat sample_addition(const AdditionRuleModel& m, ModelSession& session,
                           Rng& rng, long long n) {
  switch (m.kind()) {
    case AdditionRuleModel::Kind::Identity:
      return Mat::Identity(m.dim(), m.dim());
    case AdditionRuleModel::Kind::DeterministicBalanced:
      return m.fixed_matrix();
    case AdditionRuleModel::Kind::BernoulliFinance: {
      for (int i = 0; i < m.dim(); ++i)
        session.t_sample(i) = rng.bernoulli(m.p()(i)) ? 1.0 : 0.0;
      return finance_addition_matrix(session.trial, session.t_sample);
    }
    case AdditionRuleModel::Kind::Custom:
      return m.sampler()(rng, n);
  }
  throw Error("model.invalid", "unreachable");
}

// Compensator given the current session (H_{n+1} as seen from F_n).
inline Mat compensator(const AdditionRuleModel& m, const ModelSession& session,
                       long long n) {
  switch (m.kind()) {
    case AdditionRuleModel::Kind::Identity:
      return Mat::Identity(m.dim(), m.dim());
    case AdditionRuleModel::Kind::DeterministicBalanced:
      return m.fixed_matrix();
    case AdditionRuleModel::Kind::BernoulliFinance:
      return finance_generating_matrix(session.trial, m.p());
    case AdditionRuleModel::Kind::Custom:
      return m.compensator()(n);
  }
  throw Error("model.invalid", "unreachable");
}

// Trial-state update after the drawn column has been applied.
inline void update_session(const AdditionRuleModel& m, ModelSession& session,
                           int drawn) {
  if (m.kind() == AdditionRuleModel::Kind::BernoulliFinance) {
    session.trial.S(drawn) += session.t_sample(drawn);
    session.trial.N(drawn) += 1.0;
  }
}

}  // namespace urnlab
