#pragma once

#include <functional>
#include <optional>
#include <string>

#include "pdflow/config.hpp"
#include "pdflow/linalg.hpp"

namespace pdflow {

// Quadratic carrier f(x) = 0.5 x'Qx + q'x + r. Enables exact saddle solves
// and the min-norm KKT solve.
struct QuadraticObjective {
  Matrix Q;
  Vector linear_term;
  double constant_term = 0.0;
};

// Known minimum-norm primal-dual solution of an instance.
struct SolutionOracle {
  Vector min_norm_primal;
  Vector min_norm_dual;
  double optimal_value = 0.0;
};

// A linearly constrained convex problem: minimize f(x) subject to Ax = b.
// Immutable after construction; oracles must be pure functions.
struct ProblemInstance {
  int dim_primal = 0;
  int dim_dual = 0;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;  // may be empty
  Matrix constraint_matrix;                      // dim_dual x dim_primal
  Vector constraint_rhs;                         // dim_dual
  std::optional<QuadraticObjective> quadratic;
  std::optional<SolutionOracle> oracle;
};

// Generic constructor: verifies the feasible set {Ax = b} is nonempty by a
// least-squares residual check. Throws InfeasibleConstraints, DimensionMismatch.
ProblemInstance make_instance(std::function<double(const Vector&)> objective,
                              std::function<Vector(const Vector&)> gradient,
                              std::function<Matrix(const Vector&)> hessian,
                              Matrix A, Vector b);

// Exact-oracle quadratic instance. Throws DimensionMismatch, NotPsd,
// InfeasibleConstraints.
ProblemInstance build_quadratic(const Matrix& Q, const Vector& q, double r,
                                const Matrix& A, const Vector& b);

// The bundled reference problem: minimize (x1 - x2)^2 + x3^2 subject to
// x1 - x2 + x3 = 2, with known minimum-norm solution
// x* = (1/2, -1/2, 1), lambda* = -2, f* = 2.
ProblemInstance build_reference_problem();

// Returns a copy of the instance with the oracle attached, after verifying
// the KKT residuals of (x*, lambda*) are below 1e-9.
ProblemInstance with_oracle(ProblemInstance instance, SolutionOracle oracle);

// Minimum-norm element of the KKT solution set of a quadratic instance,
// i.e. the least-norm solution of [Q A'; A 0] (x; lambda) = (-q; b).
// Throws KktInconsistent if no KKT point exists.
SolutionOracle solve_min_norm_kkt(const ProblemInstance& instance);

// Largest relative mismatch between the gradient oracle and a central
// finite difference of the objective over n random points (fixed seed).
double gradient_max_rel_error(const ProblemInstance& instance, int n_points,
                              unsigned seed);

// Instance description file: keys Q (row-major), q, r, A (row-major), b and
// optional oracle.x_star / oracle.lambda_star / oracle.f_star.
ProblemInstance parse_instance(const config::Document& doc);
ProblemInstance load_instance(const std::string& path);
config::Document instance_to_document(const ProblemInstance& instance);
void save_instance(const std::string& path, const ProblemInstance& instance);

}  // namespace pdflow
