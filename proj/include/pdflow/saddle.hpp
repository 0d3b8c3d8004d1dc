#pragma once

#include "pdflow/problem.hpp"

namespace pdflow {

// Vanishing Tikhonov strength epsilon(t) = c / t^p.
struct RegularizationSchedule {
  double c = 0.1;
  double p = 0.5;

  double epsilon(double t) const;
};

void validate_schedule(const RegularizationSchedule& sched);  // c > 0, 0 < p < 1

// Saddle point of the regularized Lagrangian
//   L_t(x, lambda) = L(x, lambda) + (c / 2 t^p) (|x|^2 - |lambda|^2)
// at a fixed time t, together with the residual of the stationarity system.
struct SaddlePoint {
  double t = 0.0;
  Vector x;
  Vector lambda;
  double residual = 0.0;
};

// L(x, lambda) = f(x) + <lambda, Ax - b>.
double lagrangian(const ProblemInstance& instance, const Vector& x,
                  const Vector& lambda);

// L_t per the definition above. Throws NonpositiveTime for t <= 0.
double regularized_lagrangian(const ProblemInstance& instance,
                              const RegularizationSchedule& sched, double t,
                              const Vector& x, const Vector& lambda);

// Unique saddle of L_t. Quadratic instances use one symmetric-quasidefinite
// linear solve of [(Q + eps I)  A'; A  -eps I]; otherwise damped Newton on
// the stationarity system, warm-started from `warm` when given.
// Throws NewtonDivergence if the general path stalls.
SaddlePoint solve_saddle(const ProblemInstance& instance,
                         const RegularizationSchedule& sched, double t,
                         const SaddlePoint* warm = nullptr);

// d/dt (x_t, lambda_t), estimated by central differences with step
// h = max(1e-5 t, 1e-7); both endpoint solves are warm-started.
Vector saddle_velocity(const ProblemInstance& instance,
                       const RegularizationSchedule& sched, double t);

struct DerivativeIdentityCheck {
  double lhs = 0.0;       // finite-difference d/dt L_t(x_t, lambda_t)
  double rhs = 0.0;       // (c p / 2 t^{p+1}) (|lambda_t|^2 - |x_t|^2)
  double abs_error = 0.0;
};

DerivativeIdentityCheck check_saddle_derivative_identity(
    const ProblemInstance& instance, const RegularizationSchedule& sched,
    double t, double h_rel = 1e-4);

}  // namespace pdflow
