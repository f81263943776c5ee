#pragma once

#include "urnlab/common.hpp"
#include "urnlab/rng.hpp"
#include "urnlab/shape.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

namespace urnlab {

struct MeanFieldModel {
  ShapeFunction f;
  Mat H;
  int d;

  MeanFieldModel(ShapeFunction f_, Mat H_)
      : f(std::move(f_)), H(std::move(H_)), d(int(H.rows())) {
    require(H.rows() == H.cols() && d >= 2, "meanfield.model",
            "H must be square, d >= 2");
    require(is_costochastic(H, 1e-12), "meanfield.model",
            "H columns must each sum to 1");
  }

  // d=2 co-stochastic parametrization H = [[p1, 1-p2], [1-p1, p2]].
  static MeanFieldModel two_color(ShapeFunction f, double p1, double p2) {
    require(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0, "meanfield.model",
            "p1, p2 must lie in (0,1)");
    Mat H(2, 2);
    H << p1, 1.0 - p2, 1.0 - p1, p2;
    return MeanFieldModel(std::move(f), std::move(H));
  }
};

inline Vec f_tilde(const ShapeFunction& f, const Vec& y) {
  Vec v(y.size());
  for (int i = 0; i < y.size(); ++i) v(i) = f(y(i));
  return v;
}

// phi_H(y) = H f~(y) / Tr(f~(y)), the fixed-point map on the simplex.
inline Vec phi(const MeanFieldModel& m, const Vec& y) {
  Vec fv = f_tilde(m.f, y);
  double tr = fv.sum();
  require(tr > 0.0, "meanfield.degenerate", "Tr(f~(y)) = 0");
  return m.H * (fv / tr);
}

// Mean field h(y) = y - phi_H(y); its zeros are the candidate limits.
inline Vec mean_field(const MeanFieldModel& m, const Vec& y) {
  return y - phi(m, y);
}

enum class Stability { Attractive, Repulsive, Degenerate, Unclassified };

inline const char* stability_name(Stability s) {
  switch (s) {
    case Stability::Attractive: return "attractive";
    case Stability::Repulsive: return "repulsive";
    case Stability::Degenerate: return "degenerate";
    case Stability::Unclassified: return "unclassified";
  }
  return "?";
}

struct EquilibriumPoint {
  Vec y;
  Stability stability = Stability::Unclassified;
  double h1_deriv = std::numeric_limits<double>::quiet_NaN();  // d=2 only
  double h1_second_deriv = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::complex<double>> jacobian_spectrum;  // Dh on 1^perp
};

struct EquilibriumReport {
  std::vector<EquilibriumPoint> points;
  int discarded_starts = 0;
};

namespace detail2d {

// Root equation (p1 - y) f(y) + (1 - p2 - y) f(1 - y) = 0; equals
// -h^1(y) * Tr(f~(y)) on [0,1].
inline double root_fn(const ShapeFunction& f, double p1, double p2, double y) {
  return (p1 - y) * f(y) + (1.0 - p2 - y) * f(1.0 - y);
}

inline double h1(const ShapeFunction& f, double p1, double p2, double y) {
  double t = f(y) + f(1.0 - y);
  return y - (p1 * f(y) + (1.0 - p2) * f(1.0 - y)) / t;
}

inline double h1_deriv(const ShapeFunction& f, double p1, double p2,
                       double y) {
  double fy = f(y), f1y = f(1.0 - y);
  double dfy = f.deriv(y), df1y = f.deriv(1.0 - y);
  double t = fy + f1y;
  double num = p1 * fy + (1.0 - p2) * f1y;
  double dnum = p1 * dfy - (1.0 - p2) * df1y;
  double dt = dfy - df1y;
  return 1.0 - (dnum * t - num * dt) / (t * t);
}

inline double h1_second_deriv(const ShapeFunction& f, double p1, double p2,
                              double y) {
  double e = 1e-6;
  return (h1_deriv(f, p1, p2, y + e) - h1_deriv(f, p1, p2, y - e)) / (2.0 * e);
}

template <class F>
inline double bisect(F&& g, double a, double b, double ga) {
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    double m = 0.5 * (a + b);
    double gm = g(m);
    if (gm == 0.0) return m;
    if ((ga < 0.0) == (gm < 0.0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail2d

// All zeros of the two-color mean field, with stability labels from the sign
// of (h^1)'. A crossing pair that brackets a critical point c of h^1 with
// |h^1(c)| < 1e-4 is a near-double root and is reported as a single
// degenerate point at c; the sign of (h^1)'' resolves its one-sided nature.
inline EquilibriumReport equilibria_2d(const ShapeFunction& f, double p1,
                                       double p2) {
  require(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0, "meanfield.model",
          "p1, p2 must lie in (0,1)");
  const double lo = std::min(p1, 1.0 - p2);
  const double hi = std::max(p1, 1.0 - p2);
  const double tang_tol = 1e-4;
  const double merge_window = 0.02;

  auto g = [&](double y) { return detail2d::root_fn(f, p1, p2, y); };
  auto dh1 = [&](double y) { return detail2d::h1_deriv(f, p1, p2, y); };

  EquilibriumReport report;
  std::vector<double> roots;
  std::vector<double> tangent_points;

  if (hi - lo < 1e-14) {
    roots.push_back(p1);  // p1 = 1 - p2: unique solution
  } else {
    const int grid = 10000;
    double prev_y = lo, prev_g = g(lo), prev_d = dh1(lo);
    for (int k = 1; k <= grid; ++k) {
      double y = lo + (hi - lo) * double(k) / grid;
      double gy = g(y);
      double dy = dh1(y);
      if (prev_g == 0.0) {
        roots.push_back(prev_y);
      } else if ((prev_g < 0.0) != (gy < 0.0)) {
        roots.push_back(detail2d::bisect(g, prev_y, y, prev_g));
      }
      if ((prev_d < 0.0) != (dy < 0.0)) {
        double c = detail2d::bisect(dh1, prev_y, y, prev_d);
        if (std::abs(detail2d::h1(f, p1, p2, c)) < tang_tol)
          tangent_points.push_back(c);
      }
      prev_y = y;
      prev_g = gy;
      prev_d = dy;
    }
    require(!roots.empty() || !tangent_points.empty(), "meanfield.internal",
            "root scan failed to bracket a zero (h1(0)<0<h1(1))");
    for (double c : tangent_points) {
      roots.erase(std::remove_if(roots.begin(), roots.end(),
                                 [&](double r) {
                                   return std::abs(r - c) <= merge_window;
                                 }),
                  roots.end());
    }
  }

  for (double r : roots) {
    EquilibriumPoint pt;
    pt.y = Vec(2);
    pt.y << r, 1.0 - r;
    pt.h1_deriv = dh1(r);
    pt.h1_second_deriv = detail2d::h1_second_deriv(f, p1, p2, r);
    pt.stability = pt.h1_deriv > 1e-8    ? Stability::Attractive
                   : pt.h1_deriv < -1e-8 ? Stability::Repulsive
                                         : Stability::Degenerate;
    pt.jacobian_spectrum = {{pt.h1_deriv, 0.0}};
    report.points.push_back(std::move(pt));
  }
  for (double c : tangent_points) {
    EquilibriumPoint pt;
    pt.y = Vec(2);
    pt.y << c, 1.0 - c;
    pt.h1_deriv = dh1(c);
    pt.h1_second_deriv = detail2d::h1_second_deriv(f, p1, p2, c);
    pt.stability = Stability::Degenerate;
    pt.jacobian_spectrum = {{pt.h1_deriv, 0.0}};
    report.points.push_back(std::move(pt));
  }
  std::sort(report.points.begin(), report.points.end(),
            [](const EquilibriumPoint& a, const EquilibriumPoint& b) {
              return a.y(0) < b.y(0);
            });

  for (const auto& pt : report.points) {
    double tol = pt.stability == Stability::Degenerate ? tang_tol : 1e-10;
    require(std::abs(detail2d::h1(f, p1, p2, pt.y(0))) < tol,
            "meanfield.internal", "root certification failed");
  }
  return report;
}

// Jacobian of phi at the barycenter y(d) = (1/d) 1: entries a (diagonal) and
// b (off-diagonal); eigenvalues 0 on span(1) and lambda1 = a - b on 1^perp.
struct BarycenterJacobian {
  double a;
  double b;
  double lambda1;
};

inline BarycenterJacobian jacobian_phi_at_barycenter(const ShapeFunction& f,
                                                     int d) {
  require(d >= 2, "meanfield.model", "d >= 2");
  double fd = f(1.0 / d);
  require(fd > 0.0, "meanfield.degenerate", "f(1/d) must be positive");
  double fpd = f.deriv(1.0 / d);
  double a = fpd * (d - 1) / (double(d) * d * fd);
  double b = -a / (d - 1);
  return {a, b, a - b};
}

// Tangent-space Jacobian of h: central finite differences along an
// orthonormal basis of 1^perp, except the analytic (I - lambda1 H) form at
// the barycenter of a bi-stochastic H.
inline Mat tangent_jacobian(const MeanFieldModel& m, const Vec& y,
                            double fd_step = 1e-6) {
  int d = m.d;
  Mat B = tangent_basis(d);
  if (is_bistochastic(m.H) &&
      (y - uniform_simplex(d)).cwiseAbs().maxCoeff() < 1e-12) {
    double l1 = jacobian_phi_at_barycenter(m.f, d).lambda1;
    Mat Ht = B.transpose() * m.H * B;
    return Mat::Identity(d - 1, d - 1) - l1 * Ht;
  }
  Mat J(d - 1, d - 1);
  for (int k = 0; k < d - 1; ++k) {
    Vec hp = mean_field(m, y + fd_step * B.col(k));
    Vec hm = mean_field(m, y - fd_step * B.col(k));
    J.col(k) = B.transpose() * (hp - hm) / (2.0 * fd_step);
  }
  return J;
}

inline std::vector<std::complex<double>> matrix_spectrum(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A, /*computeEigenvectors=*/false);
  std::vector<std::complex<double>> out(A.rows());
  for (int i = 0; i < A.rows(); ++i) out[i] = es.eigenvalues()(i);
  return out;
}

namespace detail_gen {

inline Vec clamp_to_simplex(Vec y) {
  for (int i = 0; i < y.size(); ++i) y(i) = std::max(y(i), 0.0);
  double s = y.sum();
  if (s <= 0.0) return uniform_simplex(int(y.size()));
  return y / s;
}

inline std::optional<Vec> damped_iterate(const MeanFieldModel& m, Vec y,
                                         bool reversed, double tau,
                                         int max_iters) {
  for (int it = 0; it < max_iters; ++it) {
    Vec p;
    try {
      p = phi(m, y);
    } catch (const Error&) {
      return std::nullopt;
    }
    Vec next = reversed ? detail_gen::clamp_to_simplex(y + tau * (y - p))
                        : Vec((1.0 - tau) * y + tau * p);
    double delta = (next - y).cwiseAbs().maxCoeff();
    y = next;
    if (delta < 1e-10) return y;  // Newton polish finishes the job
  }
  return std::nullopt;
}

inline std::optional<Vec> newton_polish(const MeanFieldModel& m, Vec y) {
  Mat B = tangent_basis(m.d);
  for (int it = 0; it < 30; ++it) {
    Vec h;
    try {
      h = mean_field(m, y);
    } catch (const Error&) {
      return std::nullopt;
    }
    double res = h.cwiseAbs().maxCoeff();
    if (res < 1e-12) return y;
    Mat J = tangent_jacobian(m, y);
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible()) return res < 1e-10 ? std::optional<Vec>(y)
                                               : std::nullopt;
    Vec dz = lu.solve(B.transpose() * h);
    if (!dz.allFinite() || dz.cwiseAbs().maxCoeff() > 0.5) return std::nullopt;
    y -= B * dz;
    for (int i = 0; i < y.size(); ++i)
      if (y(i) < 0.0 && y(i) > -1e-12) y(i) = 0.0;
    if (y.minCoeff() < 0.0) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace detail_gen

// Fixed-point search on the simplex: damped forward iteration (attractors),
// reversed iteration (repellers), Newton polish, dedup within 1e-8.
inline EquilibriumReport equilibria_general(const MeanFieldModel& m,
                                            int starts,
                                            std::uint64_t seed = 20240901) {
  require(m.d >= 2, "meanfield.model", "d >= 2");
  const int d = m.d;
  const double tau = 0.5;
  const int max_iters = 5000;

  std::vector<Vec> seeds;
  seeds.push_back(uniform_simplex(d));
  for (int i = 0; i < d; ++i) seeds.push_back(subset_barycenter(d, {i}));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      seeds.push_back(subset_barycenter(d, {i, j}));
  Rng rng(seed);
  for (int s = 0; s < starts; ++s) {
    Vec y(d);  // exponential spacings give a uniform simplex point
    double tot = 0.0;
    for (int i = 0; i < d; ++i)
      tot += (y(i) = -std::log(1.0 - rng.uniform()));
    seeds.push_back(y / tot);
  }

  EquilibriumReport report;
  std::vector<Vec> found;
  auto admit = [&](const Vec& y) {
    for (const Vec& v : found)
      if ((v - y).cwiseAbs().maxCoeff() < 1e-8) return;
    found.push_back(y);
  };

  for (const Vec& s : seeds) {
    for (bool reversed : {false, true}) {
      auto end = detail_gen::damped_iterate(m, s, reversed, tau, max_iters);
      if (!end) {
        ++report.discarded_starts;
        continue;
      }
      Vec y = *end;
      double res;
      try {
        res = mean_field(m, y).cwiseAbs().maxCoeff();
      } catch (const Error&) {
        ++report.discarded_starts;
        continue;
      }
      if (res > 1e-12) {
        auto polished = detail_gen::newton_polish(m, y);
        if (!polished) {
          ++report.discarded_starts;
          continue;
        }
        y = *polished;
      }
      if (mean_field(m, y).norm() < 1e-10) admit(y);
    }
  }

  for (const Vec& y : found) {
    EquilibriumPoint pt;
    pt.y = y;
    pt.jacobian_spectrum = matrix_spectrum(tangent_jacobian(m, y));
    double min_re = std::numeric_limits<double>::infinity();
    double max_neg = -std::numeric_limits<double>::infinity();
    bool any_small = false;
    for (auto ev : pt.jacobian_spectrum) {
      min_re = std::min(min_re, ev.real());
      if (ev.real() < 0.0) max_neg = std::max(max_neg, ev.real());
      if (std::abs(ev.real()) <= 1e-7) any_small = true;
    }
    bool boundary = y.minCoeff() < 1e-10;
    if (min_re > 1e-7)
      pt.stability = Stability::Attractive;
    else if (min_re < -1e-7)
      pt.stability = Stability::Repulsive;
    else
      pt.stability =
          (boundary && any_small) ? Stability::Unclassified : Stability::Degenerate;
    if (d == 2) {
      pt.h1_deriv = pt.jacobian_spectrum[0].real();
      pt.h1_second_deriv =
          detail2d::h1_second_deriv(m.f, m.H(0, 0), m.H(1, 1), y(0));
    }
    report.points.push_back(std::move(pt));
  }
  std::sort(report.points.begin(), report.points.end(),
            [](const EquilibriumPoint& a, const EquilibriumPoint& b) {
              return a.y(0) < b.y(0);
            });
  return report;
}

enum class BarycenterVerdict { Attractive, Unstable, Boundary };

// Barycenter attractiveness: compare Re(mu_max) of H on 1^perp against
// 1/lambda1.
inline BarycenterVerdict barycenter_stability(const ShapeFunction& f,
                                              const Mat& H) {
  require(is_bistochastic(H, 1e-10), "meanfield.contract",
          "barycenter stability needs a bi-stochastic H");
  int d = int(H.rows());
  // Spectral hypothesis checked numerically rather than assumed.
  double rho = 0.0;
  for (auto ev : matrix_spectrum(H)) rho = std::max(rho, std::abs(ev));
  require(rho <= 1.0 + 1e-10, "meanfield.contract",
          "Sp(H) not inside the closed unit disk");
  double l1 = jacobian_phi_at_barycenter(f, d).lambda1;
  Mat B = tangent_basis(d);
  double mu_max = -std::numeric_limits<double>::infinity();
  for (auto ev : matrix_spectrum(Mat(B.transpose() * H * B)))
    mu_max = std::max(mu_max, ev.real());
  if (l1 <= 0.0) return BarycenterVerdict::Attractive;
  double gap = mu_max - 1.0 / l1;
  if (std::abs(gap) <= 1e-10) return BarycenterVerdict::Boundary;
  return gap < 0.0 ? BarycenterVerdict::Attractive
                   : BarycenterVerdict::Unstable;
}

struct AlphaScanRow {
  double alpha;
  int count = 0;
  std::vector<double> roots;
  std::vector<Stability> stabilities;
};

struct AlphaScan {
  std::vector<AlphaScanRow> rows;
  double alpha_star = std::numeric_limits<double>::quiet_NaN();
};

// Equilibrium structure of f = power(alpha) along an alpha grid; the
// tangency alpha* (root count leaving 1) is located by bisection on the
// count predicate.
inline AlphaScan scan_alpha(double p1, double p2,
                            const std::vector<double>& alphas) {
  require(std::is_sorted(alphas.begin(), alphas.end()) && !alphas.empty(),
          "meanfield.scan", "alpha grid must be sorted ascending");
  AlphaScan scan;
  auto count_at = [&](double a) {
    return int(equilibria_2d(ShapeFunction::power(a), p1, p2).points.size());
  };
  for (double a : alphas) {
    auto rep = equilibria_2d(ShapeFunction::power(a), p1, p2);
    AlphaScanRow row;
    row.alpha = a;
    row.count = int(rep.points.size());
    for (const auto& pt : rep.points) {
      row.roots.push_back(pt.y(0));
      row.stabilities.push_back(pt.stability);
    }
    scan.rows.push_back(std::move(row));
  }
  for (size_t i = 0; i + 1 < scan.rows.size(); ++i) {
    if (scan.rows[i].count == 1 && scan.rows[i + 1].count > 1) {
      double a = scan.rows[i].alpha, b = scan.rows[i + 1].alpha;
      for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
        double mid = 0.5 * (a + b);
        (count_at(mid) == 1 ? a : b) = mid;
      }
      scan.alpha_star = 0.5 * (a + b);
      break;
    }
  }
  return scan;
}

struct FlowResult {
  Vec y_end;
  double dt_used = 0.0;
  int retries = 0;
  std::vector<std::pair<double, Vec>> samples;  // coarse path samples
};

// Classical 4-stage explicit integration of ODE_h = (ydot = -h(y)); the mean
// field is smooth on the compact simplex so a fixed step suffices. Round-off
// is re-projected; genuine instability halves dt and restarts.
inline FlowResult ode_flow(const MeanFieldModel& m, const Vec& y0,
                           double t_end, double dt = 1e-2) {
  require(on_simplex(y0, 1e-9), "meanfield.flow", "y0 must lie on the simplex");
  require(t_end > 0.0 && dt > 0.0, "meanfield.flow", "need t_end, dt > 0");
  auto rhs = [&](const Vec& y) { return Vec(-mean_field(m, y)); };

  auto rk4 = [&](const Vec& y, double h) {
    Vec k1 = rhs(y);
    Vec k2 = rhs(y + 0.5 * h * k1);
    Vec k3 = rhs(y + 0.5 * h * k2);
    Vec k4 = rhs(y + h * k3);
    return Vec(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };

  for (int retry = 0; retry <= 8; ++retry) {
    double step_dt = dt / double(1 << retry);
    long long steps = (long long)std::ceil(t_end / step_dt);
    Vec y = y0;
    FlowResult out;
    out.dt_used = step_dt;
    out.retries = retry;
    bool unstable = false;
    long long sample_every = std::max<long long>(1, steps / 64);
    for (long long s = 0; s < steps; ++s) {
      Vec y_next = rk4(y, step_dt);
      if (s % 16 == 0) {
        // periodic two-half-steps probe; large disagreement means the fixed
        // step is outside the stable/accurate region
        Vec y_half = rk4(rk4(y, 0.5 * step_dt), 0.5 * step_dt);
        if (!y_half.allFinite() ||
            (y_next - y_half).cwiseAbs().maxCoeff() > 1e-3) {
          unstable = true;
          break;
        }
      }
      y = y_next;
      if (!y.allFinite() || y.minCoeff() < -1e-9 ||
          std::abs(y.sum() - 1.0) > 0.5) {
        unstable = true;
        break;
      }
      for (int i = 0; i < y.size(); ++i)
        if (y(i) < 0.0) y(i) = 0.0;  // round-off re-projection
      if ((s + 1) % sample_every == 0)
        out.samples.emplace_back(double(s + 1) * step_dt, y);
    }
    if (!unstable) {
      out.y_end = y;
      return out;
    }
  }
  throw Error("meanfield.flow_unstable",
              "flow integration unstable after max dt halvings");
}

}  // namespace urnlab
