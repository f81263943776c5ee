#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace urnlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Library error with a machine-readable code ("config.*" maps to CLI exit 2,
// everything else to exit 3).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline void require(bool ok, const std::string& code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

inline double trace(const Vec& v) { return v.sum(); }

inline Vec uniform_simplex(int d) { return Vec::Constant(d, 1.0 / d); }

inline bool on_simplex(const Vec& y, double tol = 1e-9) {
  return y.minCoeff() >= -tol && std::abs(y.sum() - 1.0) <= tol;
}

// Columns of a co-stochastic matrix each sum to 1 (transpose stochastic).
inline double costochastic_gap(const Mat& H) {
  return (H.colwise().sum().array() - 1.0).abs().maxCoeff();
}

inline bool is_costochastic(const Mat& H, double tol = 1e-12) {
  return H.minCoeff() >= -tol && costochastic_gap(H) <= tol;
}

inline bool is_bistochastic(const Mat& H, double tol = 1e-10) {
  return is_costochastic(H, tol) &&
         (H.rowwise().sum().array() - 1.0).abs().maxCoeff() <= tol;
}

// Orthonormal basis of the hyperplane 1^perp, as the last d-1 columns of the
// Householder Q that maps e1 to 1/sqrt(d).
inline Mat tangent_basis(int d) {
  Vec one = Vec::Ones(d) / std::sqrt(double(d));
  Mat q = Mat::Identity(d, d);
  Vec v = one;
  v(0) -= 1.0;
  double nv = v.norm();
  if (nv > 1e-14) {
    v /= nv;
    q -= 2.0 * v * v.transpose();
  }
  return q.rightCols(d - 1);
}

// e_I = (1/|I|) sum_{i in I} e^i for a subset I of {0,...,d-1}.
inline Vec subset_barycenter(int d, const std::vector<int>& I) {
  Vec y = Vec::Zero(d);
  for (int i : I) y(i) = 1.0 / double(I.size());
  return y;
}

}  // namespace urnlab
