#include "pdflow/saddle.hpp"

#include <cmath>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

constexpr double kResidualTol = 1e-11;
constexpr int kMaxNewtonIters = 50;
constexpr double kMinDamping = 1.0 / (1 << 20);

// Stationarity residual of L_t: (grad f(x) + A'lambda + eps x, Ax - b - eps lambda).
Vector stationarity(const ProblemInstance& inst, double eps, const Vector& x,
                    const Vector& lambda) {
  const Eigen::Index n = inst.dim_primal;
  const Eigen::Index m = inst.dim_dual;
  Vector F(n + m);
  F.head(n) = inst.gradient(x) + eps * x;
  if (m > 0) {
    F.head(n) += inst.constraint_matrix.transpose() * lambda;
    F.tail(m) = inst.constraint_matrix * x - inst.constraint_rhs - eps * lambda;
  }
  return F;
}

}  // namespace

double RegularizationSchedule::epsilon(double t) const {
  if (t <= 0.0) throw NonpositiveTime("schedule evaluated at t <= 0");
  return c / std::pow(t, p);
}

void validate_schedule(const RegularizationSchedule& sched) {
  if (!(sched.c > 0.0))
    throw ConfigInvalid("Tikhonov strength c must be positive");
  if (!(sched.p > 0.0 && sched.p < 1.0))
    throw ConfigInvalid("decay exponent p must lie in (0, 1)");
}

double lagrangian(const ProblemInstance& instance, const Vector& x,
                  const Vector& lambda) {
  if (x.size() != instance.dim_primal || lambda.size() != instance.dim_dual)
    throw DimensionMismatch("lagrangian arguments do not match instance");
  double value = instance.objective(x);
  if (instance.dim_dual > 0)
    value += lambda.dot(instance.constraint_matrix * x - instance.constraint_rhs);
  return value;
}

double regularized_lagrangian(const ProblemInstance& instance,
                              const RegularizationSchedule& sched, double t,
                              const Vector& x, const Vector& lambda) {
  if (t <= 0.0) throw NonpositiveTime("regularized Lagrangian needs t > 0");
  return lagrangian(instance, x, lambda) +
         0.5 * sched.epsilon(t) * (x.squaredNorm() - lambda.squaredNorm());
}

SaddlePoint solve_saddle(const ProblemInstance& instance,
                         const RegularizationSchedule& sched, double t,
                         const SaddlePoint* warm) {
  if (t <= 0.0) throw NonpositiveTime("saddle solve needs t > 0");
  const double eps = sched.epsilon(t);
  const Eigen::Index n = instance.dim_primal;
  const Eigen::Index m = instance.dim_dual;

  SaddlePoint out;
  out.t = t;

  if (instance.quadratic) {
    const QuadraticObjective& quad = *instance.quadratic;
    Matrix K = Matrix::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = quad.Q + eps * Matrix::Identity(n, n);
    if (m > 0) {
      K.topRightCorner(n, m) = instance.constraint_matrix.transpose();
      K.bottomLeftCorner(m, n) = instance.constraint_matrix;
      K.bottomRightCorner(m, m) = -eps * Matrix::Identity(m, m);
    }
    Vector rhs(n + m);
    rhs.head(n) = -quad.linear_term;
    if (m > 0) rhs.tail(m) = instance.constraint_rhs;
    const auto lu = K.partialPivLu();
    Vector z = lu.solve(rhs);
    out.x = z.head(n);
    out.lambda = z.tail(m);
    out.residual = stationarity(instance, eps, out.x, out.lambda).norm();
    // Iterative refinement keeps the residual at the documented tolerance
    // even when the shifted system is poorly conditioned.
    for (int pass = 0; pass < 3; ++pass) {
      if (out.residual <= kResidualTol * (1.0 + z.norm())) break;
      z += lu.solve(rhs - K * z);
      out.x = z.head(n);
      out.lambda = z.tail(m);
      out.residual = stationarity(instance, eps, out.x, out.lambda).norm();
    }
    if (!(out.residual <= kResidualTol * (1.0 + z.norm())))
      throw NewtonDivergence("saddle system residual " +
                             std::to_string(out.residual) +
                             " did not reach tolerance at t = " +
                             std::to_string(t));
    return out;
  }

  if (!instance.hessian)
    throw Error("saddle solve needs quadratic data or a hessian oracle");

  Vector x = warm ? warm->x : Vector::Zero(n);
  Vector lambda = warm ? warm->lambda : Vector::Zero(m);
  Vector F = stationarity(instance, eps, x, lambda);
  double fnorm = F.norm();

  for (int iter = 0; iter < kMaxNewtonIters; ++iter) {
    const double tol = kResidualTol * (1.0 + std::hypot(x.norm(), lambda.norm()));
    if (fnorm <= tol) {
      out.x = x;
      out.lambda = lambda;
      out.residual = fnorm;
      return out;
    }
    Matrix J = Matrix::Zero(n + m, n + m);
    J.topLeftCorner(n, n) = instance.hessian(x) + eps * Matrix::Identity(n, n);
    if (m > 0) {
      J.topRightCorner(n, m) = instance.constraint_matrix.transpose();
      J.bottomLeftCorner(m, n) = instance.constraint_matrix;
      J.bottomRightCorner(m, m) = -eps * Matrix::Identity(m, m);
    }
    const Vector step = J.partialPivLu().solve(-F);
    if (!step.allFinite())
      throw NewtonDivergence("saddle Newton produced a non-finite step at t = " +
                             std::to_string(t));

    // Backtracking on the residual norm, halving down to the damping floor.
    double eta = 1.0;
    Vector x_new, lambda_new, F_new;
    double fnorm_new;
    while (true) {
      x_new = x + eta * step.head(n);
      lambda_new = lambda + eta * step.tail(m);
      F_new = stationarity(instance, eps, x_new, lambda_new);
      fnorm_new = F_new.norm();
      if (std::isfinite(fnorm_new) && fnorm_new < fnorm) break;
      eta *= 0.5;
      if (eta < kMinDamping) break;
    }
    if (!(fnorm_new < fnorm))
      throw NewtonDivergence(
          "saddle Newton stalled (residual " + std::to_string(fnorm) +
          " at t = " + std::to_string(t) + "); oracle ill-conditioned or non-convex");
    x = x_new;
    lambda = lambda_new;
    F = F_new;
    fnorm = fnorm_new;
  }
  throw NewtonDivergence("saddle Newton did not converge in " +
                         std::to_string(kMaxNewtonIters) + " iterations at t = " +
                         std::to_string(t));
}

Vector saddle_velocity(const ProblemInstance& instance,
                       const RegularizationSchedule& sched, double t) {
  const double h = std::max(1e-5 * t, 1e-7);
  const SaddlePoint center = solve_saddle(instance, sched, t);
  const SaddlePoint plus = solve_saddle(instance, sched, t + h, &center);
  const SaddlePoint minus = solve_saddle(instance, sched, t - h, &center);
  Vector v(instance.dim_primal + instance.dim_dual);
  v.head(instance.dim_primal) = (plus.x - minus.x) / (2.0 * h);
  v.tail(instance.dim_dual) = (plus.lambda - minus.lambda) / (2.0 * h);
  return v;
}

DerivativeIdentityCheck check_saddle_derivative_identity(
    const ProblemInstance& instance, const RegularizationSchedule& sched,
    double t, double h_rel) {
  const double h = h_rel * t;
  const SaddlePoint center = solve_saddle(instance, sched, t);
  const SaddlePoint plus = solve_saddle(instance, sched, t + h, &center);
  const SaddlePoint minus = solve_saddle(instance, sched, t - h, &center);
  const double lp = regularized_lagrangian(instance, sched, t + h, plus.x, plus.lambda);
  const double lm =
      regularized_lagrangian(instance, sched, t - h, minus.x, minus.lambda);

  DerivativeIdentityCheck out;
  out.lhs = (lp - lm) / (2.0 * h);
  out.rhs = sched.c * sched.p / (2.0 * std::pow(t, sched.p + 1.0)) *
            (center.lambda.squaredNorm() - center.x.squaredNorm());
  out.abs_error = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace pdflow
