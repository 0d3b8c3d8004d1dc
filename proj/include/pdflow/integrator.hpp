#pragma once

#include <functional>
#include <vector>

#include "pdflow/linalg.hpp"

namespace pdflow {

struct IntegratorConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_init = 0.0;          // 0 = choose automatically
  double h_min = 1e-12;
  double h_max = 0.0;           // 0 = 0.1 * (t_end - t0)
  long max_steps = 10'000'000;
  std::vector<double> sample_grid;  // strictly increasing, within [t0, t_end]
};

struct IntegratorStats {
  long steps_accepted = 0;
  long steps_rejected = 0;
  long rhs_evaluations = 0;
  double final_step = 0.0;
};

// Output grid values; times match the requested sample grid exactly.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  IntegratorStats stats;
};

using Rhs = std::function<void(double t, const Vector& y, Vector& dy)>;

// Adaptive explicit embedded Runge-Kutta 3(2) integration. The third-order
// member advances the solution; the embedded second-order member drives the
// error estimate. Per-component error scale is atol + rtol * |y| (infinity
// norm); acceptance uses a PI controller (safety 0.9, gains 0.3/0.4, growth
// clamp [0.2, 5]); grid output is cubic Hermite on the accepting step.
// Throws StepUnderflow, MaxStepsExceeded, NonFiniteState.
Trajectory integrate(const Rhs& rhs, double t0, double t_end, const Vector& y0,
                     const IntegratorConfig& config);

// Fixed-step driver with the same third-order member; used by order tests.
Vector integrate_fixed_step(const Rhs& rhs, double t0, double t_end,
                            const Vector& y0, long n_steps);

// n geometrically spaced times with both endpoints included.
std::vector<double> make_log_grid(double t0, double t_end, int n_points);

}  // namespace pdflow
