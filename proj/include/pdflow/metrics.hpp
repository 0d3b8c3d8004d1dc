#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdflow/dynamics.hpp"
#include "pdflow/integrator.hpp"

namespace pdflow {

// Per-time record of state plus every tracked quantity. Oracle-dependent
// fields are absent when the instance has no solution oracle.
struct TrajectorySample {
  double t = 0.0;
  Vector x;
  Vector v;
  Vector lambda;
  double feasibility = 0.0;                 // |Ax - b|
  std::optional<double> obj_residual;       // |f(x) - f*|
  std::optional<double> pd_gap;             // L(x, lambda*) - L(x*, lambda*)
  std::optional<double> dist_minnorm;       // |(x, lambda) - (x*, lambda*)|
  double dist_saddle_x = 0.0;               // |x - x_t|
  double dist_saddle_lambda = 0.0;          // |lambda - lambda_t|
  double reg_gap = 0.0;                     // L_t(x, lambda_t) - L_t(x_t, lambda_t)
  double energy = 0.0;
  double speed_sq = 0.0;                    // |v|^2
  double lemma32_g = 0.0;                   // |theta t^{2q+s} (Ax - b)|
};

// Lyapunov energy
//   E(t) = theta^2 t^{2q+s} (L_t(x, lambda_t) - L_t(x_t, lambda_t))
//        + 1/2 |x - x_t + theta t^q v|^2
//        + (alpha theta - 1 - theta q t^{q-1}) / 2 |x - x_t|^2
//        + theta / 2 |lambda - lambda_t|^2.
// Throws TimeMismatch unless saddle.t == t.
double energy(const ProblemInstance& instance, const ParameterSet& params,
              double t, const FlowState& state, const SaddlePoint& saddle);

// Which state blocks a flat trajectory state carries.
struct StateLayout {
  int dim_primal = 0;
  int dim_dual = 0;
  bool has_dual_velocity = false;  // trailing mu block (second-order dual)
};

std::vector<TrajectorySample> sample_metrics(const ProblemInstance& instance,
                                             const ParameterSet& params,
                                             const Trajectory& trajectory,
                                             const StateLayout& layout);

struct RateEstimate {
  std::string quantity;
  double fitted_exponent = 0.0;  // decay t^{-beta} yields beta
  double r_squared = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  int n_points = 0;
  std::optional<double> predicted_exponent;
};

// Value of a named quantity; names follow the CSV columns plus the squared
// variants dist_saddle_x_sq and dist_saddle_lambda_sq. Absent optional
// fields yield nullopt.
std::optional<double> sample_quantity(const TrajectorySample& sample,
                                      const std::string& name);

// Ordinary least squares of log(quantity) against log(t) over [t_lo, t_hi].
// Throws InsufficientSamples / NonPositiveValues.
RateEstimate fit_rate(const std::vector<TrajectorySample>& samples,
                      const std::string& quantity, double t_lo, double t_hi);

// Ordered (quantity, exponent) pairs: the strongest decay exponent granted
// by any applicable regime. Throws OutOfTheory when no regime applies.
using RatePrediction = std::vector<std::pair<std::string, double>>;
RatePrediction predict_rates(const ParameterSet& params);

// Boundedness certificate for g(t) = theta t^{2q+s} (Ax(t) - b): checks that
// the running sup of the corrected quantity
//   g(t) + h(t)^{-1} Int_T^t g(tau) V(tau) dtau
// stabilizes, where h(t) = exp(c t^{1-(p-q-s)} / (1-(p-q-s))) and
// V(t) = (t^{-q}/theta - (2q+s)/t - c t^{q+s-p}) h(t). All exponential
// factors are handled in log space; h itself is never materialized.
struct ScaledFeasibilityBound {
  double sup_g = 0.0;
  double sup_corrected = 0.0;
  double running_sup_mid = 0.0;   // running sup at t_end / 10
  double running_sup_last = 0.0;  // running sup at t_end
  bool bounded = false;           // last <= 1.05 * mid
};

ScaledFeasibilityBound check_scaled_feasibility_bounded(
    const ProblemInstance& instance, const ParameterSet& params,
    const std::vector<TrajectorySample>& samples, double T);

// Numerical verdict for the sup-bound property: if
//   |g(t) + e^{-mu t^nu} Int_delta^t a(tau) g(tau) dtau| <= C for t >= delta
// then sup |g| is finite, with bound 2C when a >= 0 and
// -C c0/(1+c0) + C when a <= 0 and c0 = inf e^{-mu t^nu} Int a lies in (-1, 0).
enum class SupBoundKernel { Nonnegative, Nonpositive };

struct SupBoundCheck {
  bool hypothesis_ok = false;
  bool conclusion_ok = false;
  double corrected_sup = 0.0;
  double sup_g = 0.0;
  double bound = 0.0;
  double c0 = 0.0;  // Nonpositive kernel only

  bool verified() const { return hypothesis_ok && conclusion_ok; }
};

SupBoundCheck check_integral_sup_bound(SupBoundKernel kernel, double delta,
                                       double mu, double nu,
                                       const std::function<double(double)>& a_fn,
                                       const std::function<double(double)>& g_fn,
                                       double bound_c, double t_end,
                                       int n_nodes = 2001);

// Trajectory CSV: header then rows, 17 significant digits, absent fields
// empty. Columns: t, x_*, v_*, lambda_*, feasibility, obj_residual, pd_gap,
// dist_minnorm, dist_saddle_x, dist_saddle_lambda, reg_gap, energy,
// speed_sq, lemma32_g.
void write_samples_csv(std::ostream& out,
                       const std::vector<TrajectorySample>& samples,
                       int dim_primal, int dim_dual);
std::vector<TrajectorySample> read_samples_csv(std::istream& in);

}  // namespace pdflow
