#pragma once

/// @file ode.hpp
/// Fixed-step RK4 and adaptive Dormand-Prince 5(4) integrators with exact
/// landing on a caller-supplied set of mandatory output times (no dense
/// interpolation: every observer call is a genuine integration point).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ntklab/common.hpp"

namespace ntklab {

enum class OdeMethod { rk4_fixed, dopri45 };

struct OdeOptions {
  OdeMethod method = OdeMethod::dopri45;
  double rel_tol = 1e-8;   ///< dopri45 only
  double abs_tol = 1e-10;  ///< dopri45 only
  double rk4_step = 1e-2;  ///< rk4_fixed only (upper bound; steps divide evenly)
  int max_steps = 50'000'000;
};

namespace detail {

inline void rk4_step(const std::function<Vec(double, const Vec&)>& f, double t,
                     double h, Vec& y, Vec& k1, Vec& k2, Vec& k3, Vec& k4,
                     Vec& tmp) {
  k1 = f(t, y);
  tmp = y + (0.5 * h) * k1;
  k2 = f(t + 0.5 * h, tmp);
  tmp = y + (0.5 * h) * k2;
  k3 = f(t + 0.5 * h, tmp);
  tmp = y + h * k3;
  k4 = f(t + h, tmp);
  y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Integrates y' = f(t, y) from times[0] through times.back(), calling
/// observer(times[i], y) at every mandatory time (including the first).
/// times must be strictly increasing.
///
/// dopri45 uses a standard embedded 5(4) pair with FSAL, PI-free step
/// control err^(–1/5), and mixed error norm scaled by
/// abs_tol + rel_tol*max(|y|, |y_new|). Throws StiffnessError when the
/// accepted step underflows relative to the local time scale.
inline void integrate_ode(const std::function<Vec(double, const Vec&)>& f,
                          const Vec& y0, const std::vector<double>& times,
                          const OdeOptions& opt,
                          const std::function<void(double, const Vec&)>& observer) {
  if (times.size() < 2)
    throw std::invalid_argument("integrate_ode: need at least two output times");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("integrate_ode: times must be strictly increasing");
  if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0) || !(opt.rk4_step > 0.0))
    throw std::invalid_argument("integrate_ode: tolerances and step must be positive");

  Vec y = y0;
  observer(times.front(), y);
  long long steps = 0;

  if (opt.method == OdeMethod::rk4_fixed) {
    Vec k1, k2, k3, k4, tmp;
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double span = times[i] - times[i - 1];
      const int nsub = std::max(1, static_cast<int>(std::ceil(span / opt.rk4_step - 1e-12)));
      const double h = span / nsub;
      double t = times[i - 1];
      for (int s = 0; s < nsub; ++s) {
        detail::rk4_step(f, t, h, y, k1, k2, k3, k4, tmp);
        t = times[i - 1] + (s + 1) * h;
        if (++steps > opt.max_steps)
          throw std::runtime_error("integrate_ode: rk4 step budget exceeded");
      }
      observer(times[i], y);
    }
    return;
  }

  // Dormand-Prince 5(4) coefficients.
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                      e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                      e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

  const double t_end = times.back();
  double t = times.front();
  double h_cand = std::min(1e-2 * (t_end - t), times[1] - times[0]);
  Vec k1 = f(t, y), k2, k3, k4, k5, k6, k7, y_new, err;
  std::size_t next_out = 1;

  while (next_out < times.size()) {
    const double t_stop = times[next_out];
    double h = h_cand;
    bool clamped = false;
    if (t + h >= t_stop - 1e-14 * std::max(1.0, std::fabs(t_stop))) {
      h = t_stop - t;
      clamped = true;
    }

    k2 = f(t + c2 * h, y + h * (a21 * k1));
    k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = f(t + h, y_new);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale =
          opt.abs_tol +
          opt.rel_tol * std::max(std::fabs(y(i)), std::fabs(y_new(i)));
      const double q = err(i) / scale;
      err_norm += q * q;
    }
    err_norm = std::sqrt(err_norm / static_cast<double>(y.size()));
    // Overflowing right-hand sides produce inf/NaN error estimates; treat
    // them as maximal rejections so the step controller shrinks instead of
    // propagating NaN through the factor arithmetic.
    if (!std::isfinite(err_norm))
      err_norm = std::numeric_limits<double>::max();

    const double factor =
        (err_norm == 0.0)
            ? 5.0
            : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);

    if (err_norm <= 1.0) {
      t = clamped ? t_stop : t + h;
      y.swap(y_new);
      k1.swap(k7);  // first-same-as-last
      if (clamped) {
        observer(t, y);
        ++next_out;
      } else {
        h_cand = h * factor;
      }
      // An accepted clamped step keeps the controller's candidate: the clamp
      // says nothing about the error scale of a full-size step.
    } else {
      h_cand = h * factor;
      const double h_floor = 1e-14 * std::max(1.0, std::fabs(t));
      if (h_cand < h_floor)
        throw StiffnessError(
            "integrate_ode: dopri45 step size underflow at t=" +
                std::to_string(t) + " (h=" + std::to_string(h_cand) +
                ", scaled error " + std::to_string(err_norm) +
                "); right-hand side too stiff for the tolerances",
            t, h_cand, err_norm);
    }
    if (++steps > opt.max_steps)
      throw std::runtime_error("integrate_ode: dopri45 step budget exceeded");
  }
}

}  // namespace ntklab
