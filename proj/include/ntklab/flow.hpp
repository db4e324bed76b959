#pragma once

/// @file flow.hpp
/// Gradient-flow integration with dense trajectory recording and kernel
/// snapshots, the frozen-kernel reference dynamics exp(-Gt) r0 (matrix and
/// function space), empirical decay-rate fits, and kernel drift series.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntklab/common.hpp"
#include "ntklab/dataset.hpp"
#include "ntklab/kernel.hpp"
#include "ntklab/linalg.hpp"
#include "ntklab/network.hpp"
#include "ntklab/ode.hpp"
#include "ntklab/spectral.hpp"

namespace ntklab {

struct SnapshotSchedule {
  enum class Kind {
    dense_stride,  ///< count uniform intervals locked to the dense grid
    geometric      ///< {0} then T/2^(count-1), ..., T/2, T
  };
  Kind kind = Kind::dense_stride;
  int count = 16;
};

inline std::vector<double> dense_times(double T, int dense_count) {
  if (!(T > 0.0)) throw std::invalid_argument("dense_times: T must be positive");
  if (dense_count < 2)
    throw std::invalid_argument("dense_times: need at least two times");
  std::vector<double> times(dense_count);
  for (int i = 0; i < dense_count; ++i)
    times[i] = T * i / static_cast<double>(dense_count - 1);
  return times;
}

/// Snapshot times for a schedule. dense_stride snapshots sit exactly on the
/// dense grid (every ((dense_count-1)/count)-th node), so refining the dense
/// grid refines the snapshot spacing with it.
inline std::vector<double> snapshot_times(const SnapshotSchedule& sched,
                                          double T, int dense_count) {
  std::vector<double> out;
  if (sched.kind == SnapshotSchedule::Kind::dense_stride) {
    if (sched.count < 1)
      throw std::invalid_argument("snapshot_times: count must be >= 1");
    if ((dense_count - 1) % sched.count != 0)
      throw std::invalid_argument(
          "snapshot_times: snapshot count " + std::to_string(sched.count) +
          " must divide the dense interval count " +
          std::to_string(dense_count - 1));
    const int stride = (dense_count - 1) / sched.count;
    const std::vector<double> dense = dense_times(T, dense_count);
    for (int i = 0; i <= sched.count; ++i) out.push_back(dense[i * stride]);
    return out;
  }
  if (sched.count < 1)
    throw std::invalid_argument("snapshot_times: count must be >= 1");
  out.push_back(0.0);
  for (int k = sched.count - 1; k >= 0; --k)
    out.push_back(T / std::pow(2.0, k));
  return out;
}

struct Trajectory {
  std::vector<double> times;  ///< dense output grid (uniform, starts at 0)
  Mat residuals;              ///< times x n
  Mat test_residuals;         ///< times x grid size (0 columns if no grid)
  Vec xi_series;
  Vec xi_tilde_series;

  std::vector<double> snap_times;
  std::vector<GramPair> gram_snapshots;    ///< train Gram per snapshot
  std::vector<Mat> cross_snapshots;        ///< K(grid, train) per snapshot
  std::vector<Mat> drift_snapshots;        ///< K on drift grid per snapshot
  std::vector<Vec> theta_checkpoints;      ///< flat parameters per snapshot

  int n = 0;
  int m = 0;
  int d = 0;
  double T = 0.0;

  Vec r0() const { return residuals.row(0).transpose(); }
  Vec residual_at(int i) const { return residuals.row(i).transpose(); }

  double r0_norm() const { return rn_norm(r0()); }
};

struct FlowOptions {
  OdeOptions ode;
  double T = 1.0;
  int dense_count = 129;
  SnapshotSchedule snapshots;
  Mat eval_grid;          ///< rows = held-out points; empty disables test residuals
  Vec eval_grid_targets;  ///< f* on the grid (empty means zero targets)
  Mat drift_grid;  ///< rows = drift-probe points; empty disables drift kernels
  bool record_cross = false;  ///< K(eval_grid, train) at snapshot times
};

/// Integrates the parameter flow theta' = -(1/n) sum_i rhat_i grad f(x_i)
/// from net0, recording residuals (train and held-out) at every dense time
/// and Gram/kernel snapshots at the snapshot times. Every recorded time is
/// an exact integrator stop. Enforces the monotone-residual invariant.
inline Trajectory integrate_flow(const Network& net0, Activation act,
                                 const Dataset& data, const FlowOptions& opt) {
  if (data.X.rows() != data.y.size())
    throw std::invalid_argument("integrate_flow: labels/points mismatch");
  check_input_dim(net0, data.X.cols(), "integrate_flow");
  if (opt.record_cross && opt.eval_grid.rows() == 0)
    throw std::invalid_argument(
        "integrate_flow: record_cross requires an evaluation grid");

  const std::vector<double> dense = dense_times(opt.T, opt.dense_count);
  const std::vector<double> snaps =
      snapshot_times(opt.snapshots, opt.T, opt.dense_count);

  // Merge dense and snapshot times into one strictly increasing stop list.
  std::vector<double> stops = dense;
  stops.insert(stops.end(), snaps.begin(), snaps.end());
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end(),
                          [&](double a, double b) {
                            return std::fabs(a - b) <= 1e-12 * std::max(1.0, opt.T);
                          }),
              stops.end());

  Trajectory traj;
  traj.times = dense;
  traj.n = static_cast<int>(data.X.rows());
  traj.m = net0.m;
  traj.d = net0.d;
  traj.T = opt.T;
  traj.residuals.resize(static_cast<Eigen::Index>(dense.size()), data.X.rows());
  const Eigen::Index grid_n = opt.eval_grid.rows();
  traj.test_residuals.resize(static_cast<Eigen::Index>(dense.size()), grid_n);
  traj.xi_series.resize(dense.size());
  traj.xi_tilde_series.resize(dense.size());

  Vec y_eval = Vec::Zero(grid_n);
  if (opt.eval_grid_targets.size() > 0) {
    if (opt.eval_grid_targets.size() != grid_n)
      throw std::invalid_argument(
          "integrate_flow: eval_grid_targets length mismatch");
    y_eval = opt.eval_grid_targets;
  }

  const auto rhs = [&](double, const Vec& theta) {
    Network net{net0.m, net0.d, theta};
    return flow_rhs(net, act, data.X, data.y);
  };

  std::size_t dense_idx = 0, snap_idx = 0;
  const double tol = 1e-12 * std::max(1.0, opt.T);
  const auto observer = [&](double t, const Vec& theta) {
    Network net{net0.m, net0.d, theta};
    if (dense_idx < dense.size() && std::fabs(t - dense[dense_idx]) <= tol) {
      traj.residuals.row(dense_idx) =
          (forward_batch(net, act, data.X) - data.y).transpose();
      if (grid_n > 0)
        traj.test_residuals.row(dense_idx) =
            (forward_batch(net, act, opt.eval_grid) - y_eval).transpose();
      traj.xi_series(dense_idx) = xi_of(net);
      traj.xi_tilde_series(dense_idx) = xi_tilde_of(net);
      ++dense_idx;
    }
    if (snap_idx < snaps.size() && std::fabs(t - snaps[snap_idx]) <= tol) {
      traj.snap_times.push_back(snaps[snap_idx]);
      traj.gram_snapshots.push_back(
          gram(net, act, data.X, t,
               t == 0.0 ? KernelTag::initial_0 : KernelTag::empirical_t));
      if (opt.record_cross)
        traj.cross_snapshots.push_back(
            ntk_cross_matrix(net, act, opt.eval_grid, data.X));
      if (opt.drift_grid.rows() > 0)
        traj.drift_snapshots.push_back(ntk_matrix(net, act, opt.drift_grid));
      traj.theta_checkpoints.push_back(theta);
      ++snap_idx;
    }
  };

  integrate_ode(rhs, net0.theta, stops, opt.ode, observer);

  if (dense_idx != dense.size() || snap_idx != snaps.size())
    throw std::runtime_error("integrate_flow: missed recording times");

  // Monotone residual-norm invariant (gradient flow on the squared loss).
  double prev = rn_norm(traj.r0());
  const double slack = 1e-9 * std::max(1.0, prev);
  for (Eigen::Index i = 1; i < traj.residuals.rows(); ++i) {
    const double cur = rn_norm(traj.residual_at(static_cast<int>(i)));
    if (cur > prev + slack)
      throw std::runtime_error(
          "integrate_flow: residual norm increased from " +
          std::to_string(prev) + " to " + std::to_string(cur) + " at t=" +
          std::to_string(traj.times[static_cast<std::size_t>(i)]) +
          " (integrator tolerance too loose)");
    prev = cur;
  }
  return traj;
}

/// exp(-G t) r0 through the eigensystem of G (1/n convention): the exact
/// solution of the frozen-kernel dynamics r' = -G r.
inline Vec kernel_regression_reference(const EigenSystem& sys, const Vec& r0,
                                       double t) {
  if (t < 0.0)
    throw std::invalid_argument("kernel_regression_reference: t must be >= 0");
  if (r0.size() != sys.n())
    throw std::invalid_argument("kernel_regression_reference: size mismatch");
  Vec coeffs = sys.U.transpose() * r0 / static_cast<double>(sys.n());
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    coeffs(i) *= std::exp(-sys.lambdas(i) * t);
  return sys.U * coeffs;
}

inline Vec kernel_regression_reference(const GramPair& g, const Vec& r0,
                                       double t) {
  if (t < 0.0)
    throw std::invalid_argument("kernel_regression_reference: t must be >= 0");
  return SymExpFlow(g.G).apply(r0, t);
}

/// Function-space frozen-kernel reference on a circle grid:
/// sum_i e^{-sigma_i t} <r0, phi_i> phi_i evaluated on grid_angles, with the
/// inner products by equispaced quadrature. Errors out if the model's modes
/// capture less than 1 - 1e-3 of the quadrature energy of r0.
inline Vec function_space_reference(const SpectrumModel& model,
                                    const Vec& r0_on_grid,
                                    const Vec& grid_angles, double t) {
  if (t < 0.0)
    throw std::invalid_argument("function_space_reference: t must be >= 0");
  if (r0_on_grid.size() != grid_angles.size())
    throw std::invalid_argument("function_space_reference: grid mismatch");
  const Eigen::Index g = grid_angles.size();
  Vec coeffs(model.size());
  double captured = 0.0;
  for (int i = 0; i < model.size(); ++i) {
    coeffs(i) = circle_mode_inner(r0_on_grid, grid_angles, model.modes[i]);
    captured += coeffs(i) * coeffs(i);
  }
  const double total = rn_dot(r0_on_grid, r0_on_grid);
  if (total > 0.0 && captured < (1.0 - 1e-3) * total)
    throw std::invalid_argument(
        "function_space_reference: retained modes capture only " +
        std::to_string(captured / total) +
        " of the residual energy (need >= 0.999); add modes");
  Vec out = Vec::Zero(g);
  for (int i = 0; i < model.size(); ++i) {
    const double damped = std::exp(-model.sigma(i) * t) * coeffs(i);
    if (damped == 0.0) continue;
    for (Eigen::Index j = 0; j < g; ++j)
      out(j) += damped * model.modes[i].eval(grid_angles(j));
  }
  return out;
}

struct RateFit {
  double rate = 0.0;       ///< decay rate (positive for decaying series)
  double r_squared = 0.0;
  double window_t_lo = 0.0;
  double window_t_hi = 0.0;
  int points = 0;
};

/// Least-squares exponential-rate fit of log(value) against t over the
/// window where value lies in [0.05, 0.8] of the initial value. Series that
/// never enter the window (near-constant) are fitted over all points. A
/// non-positive value inside the window raises a domain error: the series
/// crossed zero and per-eigenspace energies should be fitted instead.
inline RateFit rate_fit(const std::vector<double>& times,
                        const std::vector<double>& values) {
  if (times.size() != values.size() || times.size() < 3)
    throw std::invalid_argument("rate_fit: need >= 3 aligned samples");
  const double v0 = values.front();
  if (!(v0 > 0.0))
    throw std::domain_error("rate_fit: initial value must be positive");

  std::size_t lo = 0, hi = times.size();
  while (lo < times.size() && values[lo] > 0.8 * v0) ++lo;
  for (std::size_t i = lo; i < times.size(); ++i) {
    if (values[i] < 0.05 * v0) {
      hi = i;
      break;
    }
  }
  if (hi - lo < 3) {  // window too small: constant or near-constant series
    lo = 0;
    hi = times.size();
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    if (!(values[i] > 0.0))
      throw std::domain_error(
          "rate_fit: series crosses zero inside the fit window (t=" +
          std::to_string(times[i]) + "); fit the eigenspace energy instead");
    const double x = times[i], y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("rate_fit: degenerate time grid");
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;

  double ss_res = 0.0, ss_tot = 0.0;
  const double mean_y = sy / n;
  for (std::size_t i = lo; i < hi; ++i) {
    const double y = std::log(values[i]);
    const double fit = slope * times[i] + intercept;
    ss_res += (y - fit) * (y - fit);
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  RateFit out;
  out.rate = -slope;
  out.r_squared = (ss_tot == 0.0) ? 1.0 : 1.0 - ss_res / ss_tot;
  out.window_t_lo = times[lo];
  out.window_t_hi = times[hi - 1];
  out.points = static_cast<int>(hi - lo);
  return out;
}

/// First time the series drops to half its initial value, linearly
/// interpolated between samples; +inf if it never does.
inline double half_crossing_time(const std::vector<double>& times,
                                 const std::vector<double>& values) {
  if (times.size() != values.size() || times.empty())
    throw std::invalid_argument("half_crossing_time: bad series");
  const double target = 0.5 * values.front();
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (values[i] <= target) {
      const double v0 = values[i - 1], v1 = values[i];
      if (v0 == v1) return times[i];
      const double w = (v0 - target) / (v0 - v1);
      return times[i - 1] + w * (times[i] - times[i - 1]);
    }
  }
  return std::numeric_limits<double>::infinity();
}

struct DriftSeries {
  std::vector<double> times;
  std::vector<double> sup_drift;     ///< sup over drift-grid pairs |K_t - K_0|
  std::vector<double> op_deviation;  ///< ||G_inf - G_t||_op on train points
};

/// Kernel drift along a trajectory: sup-norm drift on the drift grid plus
/// operator-norm deviation of the train Gram from a reference G_inf.
inline DriftSeries kernel_drift(const Trajectory& traj, const Mat& g_inf) {
  if (traj.drift_snapshots.empty())
    throw std::invalid_argument(
        "kernel_drift: trajectory has no drift-grid kernel snapshots");
  if (g_inf.rows() != traj.n || g_inf.cols() != traj.n)
    throw std::invalid_argument("kernel_drift: G_inf must be n x n");
  DriftSeries out;
  for (std::size_t i = 0; i < traj.snap_times.size(); ++i) {
    out.times.push_back(traj.snap_times[i]);
    out.sup_drift.push_back(
        (traj.drift_snapshots[i] - traj.drift_snapshots[0]).cwiseAbs().maxCoeff());
    out.op_deviation.push_back(
        power_iteration_opnorm(Mat(g_inf - traj.gram_snapshots[i].G)));
  }
  return out;
}

}  // namespace ntklab
