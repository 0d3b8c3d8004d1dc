#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pdflow/problem.hpp"
#include "pdflow/saddle.hpp"

namespace pdflow {

// Parameters of the main flow
//   x'' + (alpha / t^q) x' + t^s (grad_x L(x, lambda) + (c / t^p) x) = 0
//   lambda' = t^{q+s} (A (x + theta t^q x') - b - (c / t^p) lambda).
struct ParameterSet {
  double alpha = 3.0;
  double theta = 1.0;
  double c = 0.1;
  double p = 0.5;
  double q = 0.0;
  double s = 0.5;
  double t0 = 1.0;

  RegularizationSchedule schedule() const { return {c, p}; }
};

// Hard bounds: alpha > 0, c > 0, t0 > 0, 0 <= q < 1, 0 < p < 1.
// Throws ConfigInvalid naming the offending field.
void validate_parameters(const ParameterSet& params);

// The full standing assumption additionally requires theta > 1/alpha and
// p < 1 - q. Violations are flagged, not fatal.
bool assumption_holds(const ParameterSet& params);

struct FlowState {
  Vector x;
  Vector v;       // x'
  Vector lambda;
};

// Comparison system with inertia in both blocks:
//   x''      + (alpha / t^q) x'      = -beta(t) grad_x L_rho(x, lambda + theta t^kappa lambda') + e(t)
//   lambda'' + (alpha / t^q) lambda' =  beta(t) grad_lambda L_rho(x + theta t^kappa x', lambda)
// with beta(t) = t^s and the augmented Lagrangian
// L_rho(x, lambda) = f(x) + <lambda, Ax - b> + (rho / 2) |Ax - b|^2.
struct HeParameters {
  double alpha = 3.0;
  double theta = 1.0;
  double rho = 1.0;
  double kappa = 0.0;
  double q = 0.0;
  double s = 0.5;
  std::function<Vector(double)> perturbation;  // e(t); zero when empty
};

struct HeFlowState {
  Vector x;
  Vector v;       // x'
  Vector lambda;
  Vector mu;      // lambda'
};

FlowState rhs_main(const ProblemInstance& instance, const ParameterSet& params,
                   double t, const FlowState& state);

// Constant-damping special case:
//   x'' + alpha x' + t^p grad_x L(x, lambda) + c x = 0
//   lambda' = t^p grad_lambda L(x + theta x', lambda) - c lambda.
// Coincides with rhs_main when q = 0 and s = p.
FlowState rhs_chbani(const ProblemInstance& instance, const ParameterSet& params,
                     double t, const FlowState& state);

HeFlowState rhs_heode(const ProblemInstance& instance, const HeParameters& params,
                      double t, const HeFlowState& state);

enum class Regime {
  FastSaddleTracking,  // p - q - 1 < s < (p - 3q - 1) / 2
  SlowRegime,          // (p - 3q - 1) / 2 <= s < 1 - 3q
  ImprovedSlowRegime,  // p - 2q < s < 1 - 3q
  GapOptimal,          // -2q < s <= p - 2q
};

std::string to_string(Regime tag);

// Regime tags may overlap; an empty tag set means the parameters fall
// outside the theory. Depends only on (p, q, s).
struct RegimeClassification {
  std::vector<Regime> tags;
  double r = 0.0;             // max{q, p - q - s}
  bool assumption_ok = true;  // full standing assumption satisfied

  bool out_of_theory() const { return tags.empty(); }
  bool has(Regime tag) const;
};

RegimeClassification classify_regime(const ParameterSet& params);

// Flat packing for the integrator: (x, v, lambda) and (x, v, lambda, mu).
Vector flatten(const FlowState& state);
FlowState unflatten(int dim_primal, int dim_dual, const Vector& y);
Vector flatten(const HeFlowState& state);
HeFlowState unflatten_he(int dim_primal, int dim_dual, const Vector& y);

}  // namespace pdflow
