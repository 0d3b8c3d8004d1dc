#include "pdflow/dynamics.hpp"

#include <cmath>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

void check_state_dims(const ProblemInstance& inst, const Vector& x,
                      const Vector& v, const Vector& lambda) {
  if (x.size() != inst.dim_primal || v.size() != inst.dim_primal ||
      lambda.size() != inst.dim_dual)
    throw DimensionMismatch("flow state does not match instance dimensions");
}

}  // namespace

void validate_parameters(const ParameterSet& params) {
  if (!(params.alpha > 0.0)) throw ConfigInvalid("alpha must be positive");
  if (!(params.theta > 0.0)) throw ConfigInvalid("theta must be positive");
  if (!(params.c > 0.0)) throw ConfigInvalid("c must be positive");
  if (!(params.p > 0.0 && params.p < 1.0))
    throw ConfigInvalid("p must lie in (0, 1)");
  if (!(params.q >= 0.0 && params.q < 1.0))
    throw ConfigInvalid("q must lie in [0, 1)");
  if (!(params.t0 > 0.0)) throw ConfigInvalid("t0 must be positive");
  if (!std::isfinite(params.s)) throw ConfigInvalid("s must be finite");
}

bool assumption_holds(const ParameterSet& params) {
  return params.alpha > 0.0 && params.theta * params.alpha > 1.0 &&
         params.q >= 0.0 && params.q < 1.0 && params.p > 0.0 &&
         params.p < 1.0 - params.q && params.c > 0.0;
}

FlowState rhs_main(const ProblemInstance& instance, const ParameterSet& params,
                   double t, const FlowState& state) {
  if (t <= 0.0) throw NonpositiveTime("rhs_main needs t > 0");
  check_state_dims(instance, state.x, state.v, state.lambda);

  const double tq = std::pow(t, params.q);
  const double ts = std::pow(t, params.s);
  const double eps = params.c / std::pow(t, params.p);
  const Matrix& A = instance.constraint_matrix;

  FlowState d;
  d.x = state.v;
  Vector grad_x = instance.gradient(state.x) + eps * state.x;
  if (instance.dim_dual > 0) grad_x += A.transpose() * state.lambda;
  d.v = -(params.alpha / tq) * state.v - ts * grad_x;
  if (instance.dim_dual > 0) {
    const Vector extrapolated = state.x + params.theta * tq * state.v;
    d.lambda = tq * ts *
               (A * extrapolated - instance.constraint_rhs - eps * state.lambda);
  } else {
    d.lambda = Vector(0);
  }
  return d;
}

FlowState rhs_chbani(const ProblemInstance& instance, const ParameterSet& params,
                     double t, const FlowState& state) {
  if (t <= 0.0) throw NonpositiveTime("rhs_chbani needs t > 0");
  check_state_dims(instance, state.x, state.v, state.lambda);

  const double tp = std::pow(t, params.p);
  const Matrix& A = instance.constraint_matrix;

  FlowState d;
  d.x = state.v;
  Vector grad_x = instance.gradient(state.x);
  if (instance.dim_dual > 0) grad_x += A.transpose() * state.lambda;
  d.v = -params.alpha * state.v - tp * grad_x - params.c * state.x;
  if (instance.dim_dual > 0) {
    const Vector extrapolated = state.x + params.theta * state.v;
    d.lambda = tp * (A * extrapolated - instance.constraint_rhs) -
               params.c * state.lambda;
  } else {
    d.lambda = Vector(0);
  }
  return d;
}

HeFlowState rhs_heode(const ProblemInstance& instance, const HeParameters& params,
                      double t, const HeFlowState& state) {
  if (t <= 0.0) throw NonpositiveTime("rhs_heode needs t > 0");
  check_state_dims(instance, state.x, state.v, state.lambda);
  if (state.mu.size() != instance.dim_dual)
    throw DimensionMismatch("dual velocity does not match instance");

  const double tq = std::pow(t, params.q);
  const double beta = std::pow(t, params.s);
  const double tk = std::pow(t, params.kappa);
  const Matrix& A = instance.constraint_matrix;

  HeFlowState d;
  d.x = state.v;
  d.lambda = state.mu;

  Vector grad_x = instance.gradient(state.x);
  if (instance.dim_dual > 0) {
    const Vector feas = A * state.x - instance.constraint_rhs;
    const Vector lambda_extra = state.lambda + params.theta * tk * state.mu;
    grad_x += A.transpose() * (lambda_extra + params.rho * feas);
  }
  d.v = -(params.alpha / tq) * state.v - beta * grad_x;
  if (params.perturbation) d.v += params.perturbation(t);

  if (instance.dim_dual > 0) {
    const Vector x_extra = state.x + params.theta * tk * state.v;
    d.mu = -(params.alpha / tq) * state.mu +
           beta * (A * x_extra - instance.constraint_rhs);
  } else {
    d.mu = Vector(0);
  }
  return d;
}

std::string to_string(Regime tag) {
  switch (tag) {
    case Regime::FastSaddleTracking: return "FastSaddleTracking";
    case Regime::SlowRegime: return "SlowRegime";
    case Regime::ImprovedSlowRegime: return "ImprovedSlowRegime";
    case Regime::GapOptimal: return "GapOptimal";
  }
  return "?";
}

bool RegimeClassification::has(Regime tag) const {
  for (Regime t : tags)
    if (t == tag) return true;
  return false;
}

RegimeClassification classify_regime(const ParameterSet& params) {
  RegimeClassification out;
  out.assumption_ok = assumption_holds(params);
  const double p = params.p, q = params.q, s = params.s;
  out.r = std::max(q, p - q - s);

  if (p - q - 1.0 < s && s < (p - 3.0 * q - 1.0) / 2.0)
    out.tags.push_back(Regime::FastSaddleTracking);
  if ((p - 3.0 * q - 1.0) / 2.0 <= s && s < 1.0 - 3.0 * q)
    out.tags.push_back(Regime::SlowRegime);
  if (p - 2.0 * q < s && s < 1.0 - 3.0 * q)
    out.tags.push_back(Regime::ImprovedSlowRegime);
  if (-2.0 * q < s && s <= p - 2.0 * q)
    out.tags.push_back(Regime::GapOptimal);
  return out;
}

Vector flatten(const FlowState& state) {
  Vector y(state.x.size() + state.v.size() + state.lambda.size());
  y << state.x, state.v, state.lambda;
  return y;
}

FlowState unflatten(int dim_primal, int dim_dual, const Vector& y) {
  if (y.size() != 2 * dim_primal + dim_dual)
    throw DimensionMismatch("flat state has wrong length");
  FlowState s;
  s.x = y.segment(0, dim_primal);
  s.v = y.segment(dim_primal, dim_primal);
  s.lambda = y.segment(2 * dim_primal, dim_dual);
  return s;
}

Vector flatten(const HeFlowState& state) {
  Vector y(state.x.size() + state.v.size() + state.lambda.size() + state.mu.size());
  y << state.x, state.v, state.lambda, state.mu;
  return y;
}

HeFlowState unflatten_he(int dim_primal, int dim_dual, const Vector& y) {
  if (y.size() != 2 * dim_primal + 2 * dim_dual)
    throw DimensionMismatch("flat state has wrong length");
  HeFlowState s;
  s.x = y.segment(0, dim_primal);
  s.v = y.segment(dim_primal, dim_primal);
  s.lambda = y.segment(2 * dim_primal, dim_dual);
  s.mu = y.segment(2 * dim_primal + dim_dual, dim_dual);
  return s;
}

}  // namespace pdflow
