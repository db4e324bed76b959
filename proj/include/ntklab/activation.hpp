#pragma once

/// @file activation.hpp
/// Scalar activations with first and second derivatives, plus the
/// activation-dependent constants used by the deviation bounds.
///
/// All evaluations are finite and overflow-free for |x| <= 500.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ntklab {

enum class Activation { softplus, tanh, sigmoid, erf };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::softplus: return "softplus";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::erf: return "erf";
  }
  throw std::invalid_argument("unknown Activation");
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "softplus") return Activation::softplus;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "erf") return Activation::erf;
  throw std::invalid_argument("unknown activation '" + std::string(s) +
                              "' (expected softplus | tanh | sigmoid | erf)");
}

namespace detail {

/// Logistic function evaluated without overflow for any finite x.
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

inline double activation_value(Activation a, double x) {
  switch (a) {
    case Activation::softplus:
      return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
    case Activation::tanh:
      return std::tanh(x);
    case Activation::sigmoid:
      return detail::logistic(x);
    case Activation::erf:
      return std::erf(x);
  }
  throw std::invalid_argument("unknown Activation");
}

inline double activation_d1(Activation a, double x) {
  switch (a) {
    case Activation::softplus:
      return detail::logistic(x);
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::sigmoid: {
      const double s = detail::logistic(x);
      return s * (1.0 - s);
    }
    case Activation::erf:
      return 2.0 * std::numbers::inv_sqrtpi * std::exp(-x * x);
  }
  throw std::invalid_argument("unknown Activation");
}

inline double activation_d2(Activation a, double x) {
  switch (a) {
    case Activation::softplus: {
      const double s = detail::logistic(x);
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(x);
      return -2.0 * t * (1.0 - t * t);
    }
    case Activation::sigmoid: {
      const double s = detail::logistic(x);
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case Activation::erf:
      return -4.0 * std::numbers::inv_sqrtpi * x * std::exp(-x * x);
  }
  throw std::invalid_argument("unknown Activation");
}

/// Dispatch on derivative order; order must be 0, 1, or 2.
inline double activation_eval(Activation a, double x, int order) {
  switch (order) {
    case 0: return activation_value(a, x);
    case 1: return activation_d1(a, x);
    case 2: return activation_d2(a, x);
    default:
      throw std::invalid_argument("activation_eval: order must be 0, 1, or 2 (got " +
                                  std::to_string(order) + ")");
  }
}

/// Activation-dependent constants for a data radius M (sup norm of inputs).
///
/// D bounds the flow right-hand side through |sigma(z)| <= |sigma(0)| +
/// sup|sigma'| |z| on |z| <= M xi-type quantities; Dprime enters the kernel
/// drift bound. Dprime here dominates the smaller mean-value constant
/// max{sup|sigma'|, M sup|sigma''|, sup|sigma''|} for every supported
/// activation, so it is also a valid Lipschitz-constant ingredient.
struct ActivationConstants {
  double sigma0;   ///< sigma(0), signed
  double sup_d1;   ///< sup |sigma'|
  double sup_d2;   ///< sup |sigma''|
  double D;        ///< 3 max{|sigma(0)|, M sup|sigma'|, sup|sigma'|, 1}
  double Dprime;   ///< (max{sup|sigma'|,sup|sigma''|}^2 (M^2+1) + D sup|sigma'|) max{1, M}
};

inline ActivationConstants activation_constants(Activation a, double M) {
  if (!(M > 0.0))
    throw std::invalid_argument("activation_constants: data radius M must be positive");
  double sigma0 = 0.0, s1 = 0.0, s2 = 0.0;
  switch (a) {
    case Activation::softplus:
      sigma0 = std::numbers::ln2;
      s1 = 1.0;
      s2 = 0.25;
      break;
    case Activation::tanh:
      sigma0 = 0.0;
      s1 = 1.0;
      // max of |tanh''| is at tanh(x) = 1/sqrt(3)
      s2 = 4.0 / (3.0 * std::sqrt(3.0));
      break;
    case Activation::sigmoid:
      sigma0 = 0.5;
      s1 = 0.25;
      s2 = 1.0 / (6.0 * std::sqrt(3.0));
      break;
    case Activation::erf:
      sigma0 = 0.0;
      s1 = 2.0 * std::numbers::inv_sqrtpi;
      // max of |erf''| is at x = 1/sqrt(2)
      s2 = 2.0 * std::numbers::sqrt2 * std::exp(-0.5) * std::numbers::inv_sqrtpi;
      break;
    default:
      throw std::invalid_argument("unknown Activation");
  }
  ActivationConstants c;
  c.sigma0 = sigma0;
  c.sup_d1 = s1;
  c.sup_d2 = s2;
  c.D = 3.0 * std::max({std::fabs(sigma0), M * s1, s1, 1.0});
  const double s_max = std::max(s1, s2);
  c.Dprime = (s_max * s_max * (M * M + 1.0) + c.D * s1) * std::max(1.0, M);
  return c;
}

}  // namespace ntklab
