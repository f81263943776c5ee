#pragma once

#include "urnlab/common.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace urnlab {

// Reinforcement function of the drawing rule: non-decreasing with f(0)=0 and
// f(1)=1. Arguments below 0 are mapped to 0 (monotone extension), which keeps
// finite differences usable at the simplex boundary.
class ShapeFunction {
 public:
  enum class Kind { Identity, Power, Custom };
  enum class Curvature { Concave, Convex, Linear, Unknown };

  static ShapeFunction identity() {
    ShapeFunction f;
    f.kind_ = Kind::Identity;
    f.alpha_ = 1.0;
    f.curvature_ = Curvature::Linear;
    f.right_deriv_0_ = 1.0;
    f.left_deriv_1_ = 1.0;
    f.right_second_deriv_0_ = 0.0;
    f.unbounded_domain_ = true;
    f.regvar_index_ = 1.0;
    f.name_ = "identity";
    return f;
  }

  static ShapeFunction power(double alpha) {
    require(alpha > 0.0, "shape.invalid", "power exponent must be positive");
    ShapeFunction f;
    f.kind_ = Kind::Power;
    f.alpha_ = alpha;
    f.curvature_ = alpha < 1.0   ? Curvature::Concave
                   : alpha > 1.0 ? Curvature::Convex
                                 : Curvature::Linear;
    f.right_deriv_0_ = alpha < 1.0   ? std::numeric_limits<double>::infinity()
                       : alpha > 1.0 ? 0.0
                                     : 1.0;
    f.left_deriv_1_ = alpha;
    if (alpha == 2.0)
      f.right_second_deriv_0_ = 2.0;
    else if (alpha > 2.0 || alpha == 1.0)
      f.right_second_deriv_0_ = 0.0;
    else
      f.right_second_deriv_0_.reset();  // +inf for alpha in (0,1)u(1,2)
    f.unbounded_domain_ = true;
    f.regvar_index_ = alpha;
    f.name_ = "power:" + std::to_string(alpha);
    return f;
  }

  static ShapeFunction sqrt_shape() { return power(0.5); }

  struct CustomSpec {
    std::function<double(double)> eval;
    std::function<double(double)> deriv;
    double right_deriv_0 = std::numeric_limits<double>::quiet_NaN();
    double left_deriv_1 = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> right_second_deriv_0;
    Curvature curvature = Curvature::Unknown;
    bool unbounded_domain = false;
    std::optional<double> regvar_index;
    std::string name = "custom";
    bool allow_flat_regions = false;  // skip the f>0 spot check on (0,1]
  };

  static ShapeFunction custom(CustomSpec spec) {
    require(bool(spec.eval), "shape.invalid", "custom f needs eval");
    require(bool(spec.deriv), "shape.invalid", "custom f needs deriv");
    require(std::abs(spec.eval(0.0)) < 1e-12, "shape.invalid",
            "custom f must satisfy f(0)=0");
    require(std::abs(spec.eval(1.0) - 1.0) < 1e-9, "shape.invalid",
            "custom f must satisfy f(1)=1");
    double prev = 0.0;
    for (int i = 1; i <= 64; ++i) {
      double v = spec.eval(i / 64.0);
      require(v >= prev - 1e-12, "shape.invalid",
              "custom f must be non-decreasing on [0,1]");
      prev = v;
    }
    ShapeFunction f;
    f.kind_ = Kind::Custom;
    f.alpha_ = std::numeric_limits<double>::quiet_NaN();
    f.curvature_ = spec.curvature;
    f.eval_ = std::move(spec.eval);
    f.deriv_ = std::move(spec.deriv);
    f.right_deriv_0_ = spec.right_deriv_0;
    f.left_deriv_1_ = spec.left_deriv_1;
    f.right_second_deriv_0_ = spec.right_second_deriv_0;
    f.unbounded_domain_ = spec.unbounded_domain;
    f.regvar_index_ = spec.regvar_index;
    f.name_ = std::move(spec.name);
    return f;
  }

  double operator()(double y) const {
    if (y <= 0.0) return 0.0;
    switch (kind_) {
      case Kind::Identity:
        return y;
      case Kind::Power:
        return pow_fast(y);
      case Kind::Custom:
        return eval_(y);
    }
    return 0.0;
  }

  double deriv(double y) const {
    if (y < 0.0) return 0.0;
    switch (kind_) {
      case Kind::Identity:
        return 1.0;
      case Kind::Power:
        if (y == 0.0) return right_deriv_0_;
        return alpha_ * std::pow(y, alpha_ - 1.0);
      case Kind::Custom:
        return deriv_(y);
    }
    return 0.0;
  }

  Kind kind() const { return kind_; }
  Curvature curvature() const { return curvature_; }
  double alpha() const { return alpha_; }
  double right_deriv_0() const { return right_deriv_0_; }
  double left_deriv_1() const { return left_deriv_1_; }
  std::optional<double> right_second_deriv_0() const {
    return right_second_deriv_0_;
  }
  bool unbounded_domain() const { return unbounded_domain_; }
  std::optional<double> regvar_index() const { return regvar_index_; }
  const std::string& name() const { return name_; }

 private:
  double pow_fast(double y) const {
    // The hot simulation loops evaluate these exponents billions of times.
    if (alpha_ == 1.0) return y;
    if (alpha_ == 2.0) return y * y;
    if (alpha_ == 3.0) return y * y * y;
    if (alpha_ == 4.0) {
      double s = y * y;
      return s * s;
    }
    if (alpha_ == 0.5) return std::sqrt(y);
    return std::pow(y, alpha_);
  }

  Kind kind_ = Kind::Identity;
  Curvature curvature_ = Curvature::Linear;
  double alpha_ = 1.0;
  std::function<double(double)> eval_;
  std::function<double(double)> deriv_;
  double right_deriv_0_ = 1.0;
  double left_deriv_1_ = 1.0;
  std::optional<double> right_second_deriv_0_;
  bool unbounded_domain_ = true;
  std::optional<double> regvar_index_;
  std::string name_ = "identity";
};

}  // namespace urnlab
