#pragma once

#include "urnlab/addition.hpp"
#include "urnlab/common.hpp"
#include "urnlab/mean_field.hpp"
#include "urnlab/shape.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

namespace urnlab {

// Limits C^j of the conditional column second moments
// E[D^{.j} (D^{.j})^t | F_{n-1}].
struct NoiseModel {
  std::vector<Mat> C;

  void validate() const {
    require(!C.empty(), "noise.invalid", "empty noise model");
    int d = int(C.size());
    for (const Mat& cj : C) {
      require(cj.rows() == d && cj.cols() == d, "noise.invalid",
              "C^j must be d x d");
      require((cj - cj.transpose()).cwiseAbs().maxCoeff() <= 1e-10,
              "noise.invalid", "C^j must be symmetric");
      Eigen::SelfAdjointEigenSolver<Mat> es(cj);
      require(es.eigenvalues().minCoeff() >= -1e-10, "noise.invalid",
              "C^j must be PSD");
    }
  }

  // D = I: column j is e^j deterministically.
  static NoiseModel identity_urn(int d) {
    NoiseModel n;
    for (int j = 0; j < d; ++j) {
      Mat cj = Mat::Zero(d, d);
      cj(j, j) = 1.0;
      n.C.push_back(std::move(cj));
    }
    return n;
  }

  static NoiseModel deterministic(const Mat& D) {
    NoiseModel n;
    for (int j = 0; j < D.cols(); ++j)
      n.C.push_back(D.col(j) * D.col(j).transpose());
    return n;
  }

  // Closed form for the allocation scheme: with probability p_j the column
  // is e^j, otherwise the limit off-diagonal profile w_j.
  static NoiseModel finance(const Vec& p) {
    int d = int(p.size());
    double tot = p.sum();
    NoiseModel n;
    for (int j = 0; j < d; ++j) {
      Vec w = Vec::Zero(d);
      for (int i = 0; i < d; ++i)
        if (i != j) w(i) = p(i) / (tot - p(j));
      Mat ej = Vec::Unit(d, j) * Vec::Unit(d, j).transpose();
      n.C.push_back(p(j) * ej + (1.0 - p(j)) * w * w.transpose());
    }
    return n;
  }

  // Monte Carlo estimate for custom models with a declared sample count.
  static NoiseModel estimate(const AdditionRuleModel& model, int samples,
                             std::uint64_t master_seed) {
    require(model.kind() != AdditionRuleModel::Kind::BernoulliFinance,
            "noise.scope",
            "the allocation model's C^j depend on the estimator limit; use "
            "NoiseModel::finance(p)");
    require(samples >= 100, "noise.samples",
            "need at least 100 samples to estimate C^j");
    int d = model.dim();
    NoiseModel n;
    n.C.assign(d, Mat::Zero(d, d));
    Rng rng(master_seed, 0xC0FFEE);
    ModelSession session;
    session.reset(model);
    for (int s = 0; s < samples; ++s) {
      Mat D = sample_addition(model, session, rng, s + 1);
      for (int j = 0; j < d; ++j)
        n.C[j] += D.col(j) * D.col(j).transpose() / double(samples);
    }
    for (Mat& cj : n.C) cj = 0.5 * (cj + cj.transpose());
    return n;
  }
};

// Rate-determining eigenvalue at a certified two-color root:
// lambda = [f'(y1)(p1-y1) + f'(1-y1)(y1-1+p2)] / [f(y1)+f(1-y1)];
// Sp(Dh(y*)|S2) = {1, 1-lambda}.
inline double second_eigenvalue(const ShapeFunction& f, double p1, double p2,
                                double y_star1) {
  double t = f(y_star1) + f(1.0 - y_star1);
  require(t > 0.0, "asymptotics.degenerate", "Tr(f~(y*)) = 0");
  return (f.deriv(y_star1) * (p1 - y_star1) +
          f.deriv(1.0 - y_star1) * (y_star1 - 1.0 + p2)) /
         t;
}

inline std::pair<double, double> dh_spectrum_s2(const ShapeFunction& f,
                                                double p1, double p2,
                                                double y_star1) {
  return {1.0, 1.0 - second_eigenvalue(f, p1, p2, y_star1)};
}

// Full 2x2 Jacobian of h at a simplex root (closed form).
inline Mat dh_2d(const ShapeFunction& f, double p1, double p2,
                 double y_star1) {
  double y = y_star1;
  double t = f(y) + f(1.0 - y);
  double d1 = f.deriv(y), d2 = f.deriv(1.0 - y);
  Mat J(2, 2);
  J(0, 0) = 1.0 + d1 * (y - p1) / t;
  J(0, 1) = d2 * (y - (1.0 - p2)) / t;
  J(1, 0) = d1 * (p1 - y) / t;
  J(1, 1) = 1.0 + d2 * (1.0 - p2 - y) / t;
  return J;
}

struct GammaResult {
  Mat gamma;
  bool psd_ok = true;
  double min_eigenvalue = 0.0;
};

// Limit noise covariance
// Gamma = [f(y*1) C^1 + f(1-y*1) C^2] / Tr(f~(y*)) - y* (y*)^t.
inline GammaResult limit_gamma(const ShapeFunction& f, const Vec& y_star,
                               const NoiseModel& noise) {
  require(y_star.size() == 2 && noise.C.size() == 2, "asymptotics.scope",
          "the closed-form Gamma covers d = 2");
  noise.validate();
  double f1 = f(y_star(0)), f2 = f(y_star(1));
  double t = f1 + f2;
  require(t > 0.0, "asymptotics.degenerate", "Tr(f~(y*)) = 0");
  GammaResult out;
  out.gamma = (f1 * noise.C[0] + f2 * noise.C[1]) / t -
              y_star * y_star.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(out.gamma);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.psd_ok = out.min_eigenvalue >= -1e-9;
  return out;
}

struct SigmaResult {
  Mat sigma_tangent;    // (d-1) x (d-1) on 1^perp
  double sigma2 = 0.0;  // scalar for d = 2
  double residual = 0.0;
};

// CLT covariance on the tangent space: solves the continuous Lyapunov
// equation A S + S A^t = Gamma_t with A = (Dh - I/2) restricted to 1^perp,
// i.e. the integral form of the CLT covariance. For d=2 this collapses to
// sigma^2 = gamma_t / (1 - 2 lambda).
inline SigmaResult asymptotic_sigma(const Mat& dh_at_ystar, const Mat& gamma) {
  int d = int(dh_at_ystar.rows());
  require(gamma.rows() == d && gamma.cols() == d, "asymptotics.scope",
          "Dh/Gamma dimension mismatch");
  Mat B = tangent_basis(d);
  Mat A = B.transpose() * (dh_at_ystar - 0.5 * Mat::Identity(d, d)) * B;
  Mat Gt = B.transpose() * gamma * B;

  for (auto ev : matrix_spectrum(Mat(B.transpose() * dh_at_ystar * B)))
    require(ev.real() > 0.5 + 1e-12, "asymptotics.regime",
            "Re Sp(Dh|1perp) <= 1/2: no CLT here, use the log-CLT or "
            "a.s.-rate path");

  int m = d - 1;
  Mat K = Mat::Zero(m * m, m * m);
  // vec(A S + S A^t) = (I (x) A + A (x) I) vec(S)
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        K(j * m + i, j * m + k) += A(i, k);
        K(j * m + i, k * m + i) += A(j, k);
      }
  Vec rhs(m * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) rhs(j * m + i) = Gt(i, j);
  Vec s = K.fullPivLu().solve(rhs);
  SigmaResult out;
  out.sigma_tangent = Mat(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) out.sigma_tangent(i, j) = s(j * m + i);
  out.sigma_tangent = 0.5 * (out.sigma_tangent + out.sigma_tangent.transpose());
  out.residual = (A * out.sigma_tangent + out.sigma_tangent * A.transpose() - Gt)
                     .cwiseAbs()
                     .maxCoeff();
  if (d == 2) out.sigma2 = out.sigma_tangent(0, 0);
  return out;
}

enum class Regime { Clt, LogClt, AsRate, Outside };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Clt: return "clt";
    case Regime::LogClt: return "log_clt";
    case Regime::AsRate: return "as_rate";
    case Regime::Outside: return "outside";
  }
  return "?";
}

struct VnDescriptor {
  std::string kind;  // "1", "log_n", "power"
  double exponent = 0.0;
  double eta = 0.0;

  std::string label() const {
    if (kind == "power")
      return "n^" + std::to_string(exponent) + " (eta=" + std::to_string(eta) +
             ")";
    return kind == "log_n" ? "log n" : "1";
  }
};

struct RegimeInfo {
  Regime regime = Regime::Outside;
  double lambda = 0.0;
  VnDescriptor vn;
};

// lambda < 1/2 -> CLT with v_n = 1 (the p1+p2-1 <= 0 branch lands here with
// lambda <= 0); lambda = 1/2 -> log-CLT with v_n = log n; 1/2 < lambda < 1
// -> a.s. rate with v_n = n^{1-2 lambda + eta}; lambda >= 1 falls outside
// the rate classification (repulsive roots).
inline RegimeInfo classify_regime(double lambda, double eta = 0.05) {
  require(std::isfinite(lambda), "asymptotics.lambda", "lambda must be finite");
  require(eta > 0.0, "asymptotics.lambda", "eta must be positive");
  RegimeInfo info;
  info.lambda = lambda;
  if (std::abs(lambda - 0.5) <= 1e-10) {
    info.regime = Regime::LogClt;
    info.vn = {"log_n", 0.0, 0.0};
  } else if (lambda < 0.5) {
    info.regime = Regime::Clt;
    info.vn = {"1", 0.0, 0.0};
  } else if (lambda < 1.0) {
    info.regime = Regime::AsRate;
    info.vn = {"power", 1.0 - 2.0 * lambda + eta, eta};
  } else {
    info.regime = Regime::Outside;
    info.vn = {"1", 0.0, 0.0};
  }
  return info;
}

// Power-law surrogate of a regular-variation drawing rule: the skewed_raw
// dynamics with index-alpha f behave like f(y) = y^alpha. The CLT branch
// additionally needs alpha > 1/2.
struct RegvarSurrogate {
  ShapeFunction f;
  double alpha = 0.0;
  bool clt_index_ok = false;
};

inline RegvarSurrogate regvar_surrogate(const ShapeFunction& f_regular) {
  auto idx = f_regular.regvar_index();
  require(idx.has_value(), "asymptotics.regvar",
          "shape function declares no regular-variation index");
  require(*idx > 0.0, "asymptotics.regvar", "index must be positive");
  return {ShapeFunction::power(*idx), *idx, *idx > 0.5};
}

inline MeanFieldModel regvar_effective_model(const ShapeFunction& f_regular,
                                             const Mat& H) {
  return MeanFieldModel(regvar_surrogate(f_regular).f, H);
}

// Numeric index estimate log(f(t y)/f(y)) / log t at large y (test oracle).
inline double estimate_regvar_index(const ShapeFunction& f, double y = 1e6,
                                    double t = 10.0) {
  return std::log(f(t * y) / f(y)) / std::log(t);
}

struct CltPrediction {
  Vec y_star;
  double lambda = 0.0;
  RegimeInfo regime;
  Mat gamma;
  bool gamma_psd = true;
  Mat sigma_tangent;
  double sigma2 = 0.0;       // tangent-space scalar (d=2)
  double var_y1_pred = 0.0;  // implied Var(sqrt(n) (Y~^1_n - y*1)) = sigma2/2
};

// Assembles the full d=2 prediction at a given root.
inline CltPrediction predict_clt(const ShapeFunction& f, double p1, double p2,
                                 const NoiseModel& noise, double y_star1,
                                 double eta = 0.05) {
  CltPrediction out;
  out.y_star = Vec(2);
  out.y_star << y_star1, 1.0 - y_star1;
  out.lambda = second_eigenvalue(f, p1, p2, y_star1);
  out.regime = classify_regime(out.lambda, eta);
  GammaResult g = limit_gamma(f, out.y_star, noise);
  out.gamma = g.gamma;
  out.gamma_psd = g.psd_ok;
  if (out.regime.regime == Regime::Clt) {
    SigmaResult s = asymptotic_sigma(dh_2d(f, p1, p2, y_star1), out.gamma);
    out.sigma_tangent = s.sigma_tangent;
    out.sigma2 = s.sigma2;
    out.var_y1_pred = 0.5 * s.sigma2;
  }
  return out;
}

// Exact variance of the linearized tangent recursion
// z_{k+1} = (1 - (1-lambda) g_k) z_k + g_k dM, g_k = 1/(k+tr_y0), started at
// zero variance; diagnostic oracle for finite-horizon CLT checks.
inline double linearized_variance(double lambda, double gamma_tangent,
                                  double tr_y0, long long n) {
  double v = 0.0;
  for (long long k = 0; k < n; ++k) {
    double g = 1.0 / (double(k + 1) + tr_y0);
    double a = 1.0 - (1.0 - lambda) * g;
    v = a * a * v + g * g * gamma_tangent;
  }
  return double(n) * v;
}

}  // namespace urnlab
