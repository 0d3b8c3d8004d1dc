#include "pdflow/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

// Bogacki-Shampine 3(2) tableau. FSAL: the last stage of an accepted step is
// the first stage of the next one.
constexpr double kA21 = 1.0 / 2.0;
constexpr double kA32 = 3.0 / 4.0;
constexpr double kB1 = 2.0 / 9.0;
constexpr double kB2 = 1.0 / 3.0;
constexpr double kB3 = 4.0 / 9.0;
// b - b_hat, where b_hat = (7/24, 1/4, 1/3, 1/8) is the second-order member.
constexpr double kE1 = kB1 - 7.0 / 24.0;
constexpr double kE2 = kB2 - 1.0 / 4.0;
constexpr double kE3 = kB3 - 1.0 / 3.0;
constexpr double kE4 = -1.0 / 8.0;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;
// PI gains 0.3/0.4 for an order-2 error estimator (k = 3):
// factor = safety * err^{-0.7/k} * err_prev^{0.4/k}.
constexpr double kOrderK = 3.0;
constexpr double kBeta1 = 0.7 / kOrderK;
constexpr double kBeta2 = 0.4 / kOrderK;

double error_norm(const Vector& e, const Vector& y_old, const Vector& y_new,
                  double atol, double rtol) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double scale =
        atol + rtol * std::max(std::abs(y_old(i)), std::abs(y_new(i)));
    worst = std::max(worst, std::abs(e(i)) / scale);
  }
  return worst;
}

// Standard curvature heuristic: two trial derivative evaluations.
double initial_step(const Rhs& rhs, double t0, const Vector& y0, const Vector& f0,
                    double atol, double rtol, double span, long& nfev) {
  const auto scaled_norm = [&](const Vector& v, const Vector& ref) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double scale = atol + rtol * std::abs(ref(i));
      worst = std::max(worst, std::abs(v(i)) / scale);
    }
    return worst;
  };
  const double d0 = scaled_norm(y0, y0);
  const double d1 = scaled_norm(f0, y0);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, 0.1 * span);

  Vector y1 = y0 + h0 * f0;
  Vector f1(y0.size());
  rhs(t0 + h0, y1, f1);
  ++nfev;
  const double d2 = scaled_norm(f1 - f0, y0) / h0;

  double h1;
  if (std::max(d1, d2) <= 1e-15)
    h1 = std::max(1e-6, h0 * 1e-3);
  else
    h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / kOrderK);
  return std::min({100.0 * h0, h1, span});
}

Vector hermite(const Vector& y0, const Vector& y1, const Vector& f0,
               const Vector& f1, double h, double tau) {
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + tau) * h * f0 +
         (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * f1;
}

}  // namespace

Trajectory integrate(const Rhs& rhs, double t0, double t_end, const Vector& y0,
                     const IntegratorConfig& config) {
  if (!(t_end > t0 && t0 > 0.0))
    throw BadSpan("integration span requires t_end > t0 > 0");
  if (!(config.rtol > 0.0 && config.atol > 0.0))
    throw ConfigInvalid("tolerances must be positive");
  if (!y0.allFinite()) throw NonFiniteState("initial state is not finite", t0);

  std::vector<double> grid = config.sample_grid;
  if (grid.empty()) grid = {t0, t_end};
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < t0 || grid[i] > t_end || (i > 0 && grid[i] <= grid[i - 1]))
      throw BadSpan("sample grid must be strictly increasing within the span");
  }

  const Eigen::Index dim = y0.size();
  const double h_max =
      config.h_max > 0.0 ? config.h_max : 0.1 * (t_end - t0);
  const double h_min = std::min(config.h_min, h_max);  // tiny spans

  Trajectory traj;
  traj.times = grid;
  traj.states.reserve(grid.size());

  double t = t0;
  Vector y = y0;
  Vector k1(dim), k2(dim), k3(dim), k4(dim), y_new(dim), err(dim), stage(dim);
  rhs(t, y, k1);
  traj.stats.rhs_evaluations = 1;

  size_t next_sample = 0;
  while (next_sample < grid.size() && grid[next_sample] <= t0) {
    traj.states.push_back(y);
    ++next_sample;
  }

  double h = config.h_init > 0.0
                 ? config.h_init
                 : initial_step(rhs, t, y, k1, config.atol, config.rtol,
                                t_end - t0, traj.stats.rhs_evaluations);
  h = std::clamp(h, h_min, h_max);
  double err_prev = 1.0;

  while (t < t_end) {
    if (traj.stats.steps_accepted + traj.stats.steps_rejected >= config.max_steps)
      throw MaxStepsExceeded("exceeded " + std::to_string(config.max_steps) +
                             " steps at t = " + std::to_string(t), t);
    h = std::min(h, h_max);
    const bool last = t + h >= t_end;
    if (last) h = t_end - t;

    stage = y + (h * kA21) * k1;
    rhs(t + 0.5 * h, stage, k2);
    stage = y + (h * kA32) * k2;
    rhs(t + 0.75 * h, stage, k3);
    y_new = y + h * (kB1 * k1 + kB2 * k2 + kB3 * k3);
    rhs(t + h, y_new, k4);
    traj.stats.rhs_evaluations += 3;

    bool finite = y_new.allFinite() && k4.allFinite();
    double err_ratio = 0.0;
    if (finite) {
      err = h * (kE1 * k1 + kE2 * k2 + kE3 * k3 + kE4 * k4);
      err_ratio = error_norm(err, y, y_new, config.atol, config.rtol);
      finite = std::isfinite(err_ratio);
    }

    if (!finite) {
      ++traj.stats.steps_rejected;
      h *= 0.2;
      if (h < h_min)
        throw NonFiniteState("state became non-finite; last good t = " +
                             std::to_string(t), t);
      continue;
    }

    if (err_ratio <= 1.0) {
      // Accepted: interpolate all grid points inside (t, t + h].
      while (next_sample < grid.size() && grid[next_sample] <= t + h) {
        const double tau = (grid[next_sample] - t) / h;
        if (tau >= 1.0)
          traj.states.push_back(y_new);
        else
          traj.states.push_back(hermite(y, y_new, k1, k4, h, tau));
        ++next_sample;
      }
      t = last ? t_end : t + h;
      y.swap(y_new);
      k1.swap(k4);  // FSAL
      ++traj.stats.steps_accepted;
      traj.stats.final_step = h;

      double factor = err_ratio == 0.0
                          ? kMaxFactor
                          : kSafety * std::pow(err_ratio, -kBeta1) *
                                std::pow(err_prev, kBeta2);
      factor = std::clamp(factor, kMinFactor, kMaxFactor);
      err_prev = std::max(err_ratio, 1e-10);
      h = std::max(h * factor, h_min);
    } else {
      ++traj.stats.steps_rejected;
      const double factor =
          std::clamp(kSafety * std::pow(err_ratio, -1.0 / kOrderK), kMinFactor, 1.0);
      h *= factor;
      if (h < h_min)
        throw StepUnderflow("step size underflow at t = " + std::to_string(t) +
                            " (stiffness or blow-up)", t);
    }
  }

  while (next_sample < grid.size()) {  // grid points equal to t_end
    traj.states.push_back(y);
    ++next_sample;
  }
  return traj;
}

Vector integrate_fixed_step(const Rhs& rhs, double t0, double t_end,
                            const Vector& y0, long n_steps) {
  if (!(t_end > t0) || n_steps < 1) throw BadSpan("bad fixed-step span");
  const double h = (t_end - t0) / static_cast<double>(n_steps);
  const Eigen::Index dim = y0.size();
  Vector y = y0, k1(dim), k2(dim), k3(dim), stage(dim);
  for (long i = 0; i < n_steps; ++i) {
    const double t = t0 + h * static_cast<double>(i);
    rhs(t, y, k1);
    stage = y + (h * kA21) * k1;
    rhs(t + 0.5 * h, stage, k2);
    stage = y + (h * kA32) * k2;
    rhs(t + 0.75 * h, stage, k3);
    y += h * (kB1 * k1 + kB2 * k2 + kB3 * k3);
  }
  return y;
}

std::vector<double> make_log_grid(double t0, double t_end, int n_points) {
  if (!(t_end > t0 && t0 > 0.0) || n_points < 2)
    throw BadSpan("log grid requires t_end > t0 > 0 and at least two points");
  std::vector<double> grid(static_cast<size_t>(n_points));
  const double la = std::log(t0);
  const double lb = std::log(t_end);
  for (int i = 0; i < n_points; ++i)
    grid[static_cast<size_t>(i)] =
        std::exp(la + (lb - la) * static_cast<double>(i) /
                          static_cast<double>(n_points - 1));
  grid.front() = t0;
  grid.back() = t_end;
  return grid;
}

}  // namespace pdflow
