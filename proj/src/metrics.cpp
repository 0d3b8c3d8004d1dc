#include "pdflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "pdflow/errors.hpp"

namespace pdflow {

namespace {

double sq(double v) { return v * v; }

void fit_max(RatePrediction& pred, const std::string& name, double exponent) {
  for (auto& [k, v] : pred) {
    if (k == name) {
      v = std::max(v, exponent);
      return;
    }
  }
  pred.emplace_back(name, exponent);
}

}  // namespace

double energy(const ProblemInstance& instance, const ParameterSet& params,
              double t, const FlowState& state, const SaddlePoint& saddle) {
  if (std::abs(saddle.t - t) > 1e-12 * std::max(1.0, std::abs(t)))
    throw TimeMismatch("saddle point was solved at a different time");
  const RegularizationSchedule sched = params.schedule();
  const double reg_gap =
      regularized_lagrangian(instance, sched, t, state.x, saddle.lambda) -
      regularized_lagrangian(instance, sched, t, saddle.x, saddle.lambda);
  const double tq = std::pow(t, params.q);
  const Vector anchored = state.x - saddle.x + params.theta * tq * state.v;
  const double coef =
      params.alpha * params.theta - 1.0 -
      params.theta * params.q * std::pow(t, params.q - 1.0);
  return sq(params.theta) * std::pow(t, 2.0 * params.q + params.s) * reg_gap +
         0.5 * anchored.squaredNorm() +
         0.5 * coef * (state.x - saddle.x).squaredNorm() +
         0.5 * params.theta * (state.lambda - saddle.lambda).squaredNorm();
}

std::vector<TrajectorySample> sample_metrics(const ProblemInstance& instance,
                                             const ParameterSet& params,
                                             const Trajectory& trajectory,
                                             const StateLayout& layout) {
  if (trajectory.times.empty()) throw InsufficientSamples("trajectory is empty");
  const RegularizationSchedule sched = params.schedule();
  std::vector<TrajectorySample> out;
  out.reserve(trajectory.times.size());

  SaddlePoint warm;
  bool have_warm = false;
  for (size_t i = 0; i < trajectory.times.size(); ++i) {
    const double t = trajectory.times[i];
    FlowState state;
    if (layout.has_dual_velocity) {
      const HeFlowState he =
          unflatten_he(layout.dim_primal, layout.dim_dual, trajectory.states[i]);
      state = FlowState{he.x, he.v, he.lambda};
    } else {
      state = unflatten(layout.dim_primal, layout.dim_dual, trajectory.states[i]);
    }

    const SaddlePoint saddle =
        solve_saddle(instance, sched, t, have_warm ? &warm : nullptr);
    warm = saddle;
    have_warm = true;

    TrajectorySample s;
    s.t = t;
    s.x = state.x;
    s.v = state.v;
    s.lambda = state.lambda;
    const Vector feas = instance.constraint_matrix * state.x - instance.constraint_rhs;
    s.feasibility = feas.norm();
    s.dist_saddle_x = (state.x - saddle.x).norm();
    s.dist_saddle_lambda = (state.lambda - saddle.lambda).norm();
    s.reg_gap = regularized_lagrangian(instance, sched, t, state.x, saddle.lambda) -
                regularized_lagrangian(instance, sched, t, saddle.x, saddle.lambda);
    s.energy = energy(instance, params, t, state, saddle);
    s.speed_sq = state.v.squaredNorm();
    s.lemma32_g =
        params.theta * std::pow(t, 2.0 * params.q + params.s) * s.feasibility;
    if (instance.oracle) {
      const SolutionOracle& oracle = *instance.oracle;
      const double f = instance.objective(state.x);
      s.obj_residual = std::abs(f - oracle.optimal_value);
      s.pd_gap = f + oracle.min_norm_dual.dot(feas) - oracle.optimal_value;
      s.dist_minnorm =
          std::sqrt((state.x - oracle.min_norm_primal).squaredNorm() +
                    (state.lambda - oracle.min_norm_dual).squaredNorm());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<double> sample_quantity(const TrajectorySample& s,
                                      const std::string& name) {
  if (name == "feasibility") return s.feasibility;
  if (name == "obj_residual") return s.obj_residual;
  if (name == "pd_gap") return s.pd_gap;
  if (name == "dist_minnorm") return s.dist_minnorm;
  if (name == "dist_saddle_x") return s.dist_saddle_x;
  if (name == "dist_saddle_lambda") return s.dist_saddle_lambda;
  if (name == "dist_saddle_x_sq") return sq(s.dist_saddle_x);
  if (name == "dist_saddle_lambda_sq") return sq(s.dist_saddle_lambda);
  if (name == "reg_gap") return s.reg_gap;
  if (name == "energy") return s.energy;
  if (name == "speed_sq") return s.speed_sq;
  if (name == "lemma32_g") return s.lemma32_g;
  throw Error("unknown quantity '" + name + "'");
}

RateEstimate fit_rate(const std::vector<TrajectorySample>& samples,
                      const std::string& quantity, double t_lo, double t_hi) {
  if (!(t_lo < t_hi)) throw BadSpan("rate-fit window requires t_lo < t_hi");
  std::vector<double> lt, lv;
  int n_nonpositive = 0;
  for (const TrajectorySample& s : samples) {
    if (s.t < t_lo || s.t > t_hi) continue;
    const std::optional<double> v = sample_quantity(s, quantity);
    if (!v) continue;
    if (*v <= 0.0) {
      ++n_nonpositive;
      continue;
    }
    lt.push_back(std::log(s.t));
    lv.push_back(std::log(*v));
  }
  if (lt.size() < 10) {
    if (n_nonpositive > 0)
      throw NonPositiveValues("quantity '" + quantity +
                              "' hit zero/negative values in the fit window");
    throw InsufficientSamples("fewer than 10 usable samples for '" + quantity +
                              "' in the fit window");
  }

  const double n = static_cast<double>(lt.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < lt.size(); ++i) {
    mx += lt[i];
    my += lv[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < lt.size(); ++i) {
    sxx += sq(lt[i] - mx);
    sxy += (lt[i] - mx) * (lv[i] - my);
    syy += sq(lv[i] - my);
  }
  if (sxx < 1e-6)
    throw InsufficientSamples("fit window spans no usable time range");

  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (size_t i = 0; i < lt.size(); ++i)
    ss_res += sq(lv[i] - my - slope * (lt[i] - mx));

  RateEstimate est;
  est.quantity = quantity;
  est.fitted_exponent = -slope;
  est.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  est.t_lo = t_lo;
  est.t_hi = t_hi;
  est.n_points = static_cast<int>(lt.size());
  return est;
}

RatePrediction predict_rates(const ParameterSet& params) {
  const RegimeClassification regime = classify_regime(params);
  if (regime.out_of_theory())
    throw OutOfTheory("no regime applies to (p, q, s) = (" +
                      std::to_string(params.p) + ", " + std::to_string(params.q) +
                      ", " + std::to_string(params.s) + ")");
  const double p = params.p, q = params.q, s = params.s, r = regime.r;
  RatePrediction pred;

  if (regime.has(Regime::FastSaddleTracking)) {
    const double d2 = 2.0 * (1.0 + s + q - p);
    fit_max(pred, "dist_saddle_x_sq", d2);
    fit_max(pred, "dist_saddle_lambda_sq", d2);
    fit_max(pred, "speed_sq", 2.0 * (1.0 + s + 2.0 * q - p));
    fit_max(pred, "feasibility", std::min(p, 1.0 + s + q - p));
    if ((2.0 * p - 2.0 - 4.0 * q) / 3.0 < s) {
      const double gap = 4.0 * q + 3.0 * s - 2.0 * p + 2.0;
      fit_max(pred, "reg_gap", gap);
      fit_max(pred, "pd_gap", std::min(p, gap));
      fit_max(pred, "obj_residual", std::min(p, gap));
    }
  }
  if (regime.has(Regime::SlowRegime)) {
    const double d2 = 1.0 - 2.0 * q - s - r;
    fit_max(pred, "reg_gap", 1.0 - r);
    fit_max(pred, "dist_saddle_x_sq", d2);
    fit_max(pred, "dist_saddle_lambda_sq", d2);
    fit_max(pred, "speed_sq", 1.0 - s - r);
    const double gap = std::min(p, d2 / 2.0);
    fit_max(pred, "pd_gap", gap);
    fit_max(pred, "obj_residual", gap);
    fit_max(pred, "feasibility", gap);
  }
  if (regime.has(Regime::ImprovedSlowRegime)) {
    const double d2 = 1.0 - (p + q);
    fit_max(pred, "dist_saddle_x_sq", d2);
    const double gap = std::min(p, d2 / 2.0);
    fit_max(pred, "pd_gap", gap);
    fit_max(pred, "obj_residual", gap);
    fit_max(pred, "feasibility", gap);
  }
  if (regime.has(Regime::GapOptimal)) {
    const double gap = 2.0 * q + s;
    fit_max(pred, "pd_gap", gap);
    fit_max(pred, "obj_residual", gap);
    fit_max(pred, "feasibility", gap);
  }

  // Canonical report order.
  const char* order[] = {"feasibility",      "obj_residual",
                         "pd_gap",           "reg_gap",
                         "dist_saddle_x_sq", "dist_saddle_lambda_sq",
                         "speed_sq"};
  RatePrediction sorted;
  for (const char* name : order)
    for (const auto& [k, v] : pred)
      if (k == name) sorted.emplace_back(k, v);
  return sorted;
}

ScaledFeasibilityBound check_scaled_feasibility_bounded(
    const ProblemInstance& instance, const ParameterSet& params,
    const std::vector<TrajectorySample>& samples, double T) {
  const double p = params.p, q = params.q, s = params.s;
  const double growth = 1.0 - (p - q - s);
  if (!(growth > 0.0))
    throw ExponentOverflow("requires p - q - s < 1");

  // Exponent of h(t); only differences are ever exponentiated.
  const auto log_h = [&](double t) { return params.c / growth * std::pow(t, growth); };
  // V(t) / h(t).
  const auto weight = [&](double t) {
    return std::pow(t, -q) / params.theta - (2.0 * q + s) / t -
           params.c * std::pow(t, q + s - p);
  };

  std::vector<size_t> idx;
  for (size_t i = 0; i < samples.size(); ++i)
    if (samples[i].t >= T) idx.push_back(i);
  if (idx.size() < 3)
    throw InsufficientSamples("need at least 3 samples past T");

  const double t_end = samples[idx.back()].t;
  const double t_mid = t_end / 10.0;

  const auto g_vec = [&](const TrajectorySample& smp) -> Vector {
    return params.theta * std::pow(smp.t, 2.0 * q + s) *
           (instance.constraint_matrix * smp.x - instance.constraint_rhs);
  };

  ScaledFeasibilityBound out;
  Vector integral = Vector::Zero(instance.dim_dual);  // Int g W h(tau)/h(t) dtau
  double lh_prev = log_h(samples[idx[0]].t);
  Vector g_prev = g_vec(samples[idx[0]]);
  if (!std::isfinite(lh_prev))
    throw ExponentOverflow("exponent of h(t) is not finite");

  double running_sup = g_prev.norm();  // corrected quantity equals g at t = T
  out.sup_g = g_prev.norm();
  out.sup_corrected = running_sup;
  out.running_sup_mid = running_sup;

  double t_prev = samples[idx[0]].t;
  for (size_t k = 1; k < idx.size(); ++k) {
    const TrajectorySample& smp = samples[idx[k]];
    const double lh = log_h(smp.t);
    if (!std::isfinite(lh)) throw ExponentOverflow("exponent of h(t) overflowed");

    // h(tau)/h(t) is a boundary layer much narrower than the log grid at
    // large t; subdivide the interval so the exponent moves by <= 0.5 per
    // piece, interpolating g linearly between the stored samples.
    const Vector g = g_vec(smp);
    const double dt = smp.t - t_prev;
    const int n_sub = static_cast<int>(
        std::min(4096.0, std::max(1.0, std::ceil((lh - lh_prev) / 0.5))));
    Vector piece = Vector::Zero(instance.dim_dual);
    double a = t_prev;
    Vector fa = weight(a) * g_prev;
    double lha = lh_prev;
    for (int j = 1; j <= n_sub; ++j) {
      const double b = t_prev + dt * static_cast<double>(j) / n_sub;
      const double frac = static_cast<double>(j) / n_sub;
      const Vector gb = (1.0 - frac) * g_prev + frac * g;
      const Vector fb = weight(b) * gb;
      const double lhb = j == n_sub ? lh : log_h(b);
      piece += 0.5 * (b - a) *
               (std::exp(lha - lh) * fa + std::exp(lhb - lh) * fb);
      a = b;
      fa = fb;
      lha = lhb;
    }
    integral = std::exp(lh_prev - lh) * integral + piece;
    const double corrected = (g + integral).norm();

    out.sup_g = std::max(out.sup_g, g.norm());
    running_sup = std::max(running_sup, corrected);
    out.sup_corrected = running_sup;
    if (smp.t <= t_mid) out.running_sup_mid = running_sup;

    t_prev = smp.t;
    lh_prev = lh;
    g_prev = g;
  }
  out.running_sup_last = running_sup;
  out.bounded = out.running_sup_last <= 1.05 * out.running_sup_mid;
  return out;
}

SupBoundCheck check_integral_sup_bound(SupBoundKernel kernel, double delta,
                                       double mu, double nu,
                                       const std::function<double(double)>& a_fn,
                                       const std::function<double(double)>& g_fn,
                                       double bound_c, double t_end,
                                       int n_nodes) {
  if (!(t_end > delta && delta > 0.0)) throw BadSpan("requires t_end > delta > 0");
  if (n_nodes < 3) throw BadSpan("need at least 3 quadrature nodes");

  const double h = (t_end - delta) / static_cast<double>(n_nodes - 1);
  SupBoundCheck out;
  out.hypothesis_ok = true;

  double integral_ag = 0.0;  // Int_delta^t a g
  double integral_a = 0.0;   // Int_delta^t a
  double a_prev = a_fn(delta);
  double g_prev = g_fn(delta);
  out.corrected_sup = std::abs(g_prev);
  double c0 = 0.0;  // value at t = delta

  bool kernel_sign_ok = kernel == SupBoundKernel::Nonnegative
                            ? a_prev >= -1e-12
                            : a_prev <= 1e-12;
  for (int i = 1; i < n_nodes; ++i) {
    const double t = delta + h * static_cast<double>(i);
    const double a = a_fn(t);
    const double g = g_fn(t);
    kernel_sign_ok = kernel_sign_ok && (kernel == SupBoundKernel::Nonnegative
                                            ? a >= -1e-12
                                            : a <= 1e-12);
    integral_ag += 0.5 * h * (a_prev * g_prev + a * g);
    integral_a += 0.5 * h * (a_prev + a);
    const double damp = std::exp(-mu * std::pow(t, nu));
    out.corrected_sup = std::max(out.corrected_sup, std::abs(g + damp * integral_ag));
    c0 = std::min(c0, damp * integral_a);
    a_prev = a;
    g_prev = g;
  }
  out.c0 = c0;
  out.hypothesis_ok = kernel_sign_ok && out.corrected_sup <= bound_c * (1.0 + 1e-6);

  if (kernel == SupBoundKernel::Nonnegative) {
    out.bound = 2.0 * bound_c;
  } else {
    // c0 must lie in (-1, 0]; the bound blows up as c0 approaches -1.
    if (!(c0 > -1.0)) out.hypothesis_ok = false;
    out.bound = c0 > -1.0
                    ? -bound_c * c0 / (1.0 + c0) + bound_c
                    : 0.0;
  }

  // The sup of |g| is taken on a refinement of the quadrature grid; a bound
  // certified on coarse nodes must survive denser sampling.
  const int fine = 4 * (n_nodes - 1);
  const double hf = (t_end - delta) / static_cast<double>(fine);
  for (int i = 0; i <= fine; ++i)
    out.sup_g = std::max(out.sup_g, std::abs(g_fn(delta + hf * static_cast<double>(i))));
  out.conclusion_ok = out.sup_g <= out.bound * (1.0 + 1e-9) + 1e-300;
  return out;
}

void write_samples_csv(std::ostream& out,
                       const std::vector<TrajectorySample>& samples,
                       int dim_primal, int dim_dual) {
  out << "t";
  for (int i = 0; i < dim_primal; ++i) out << ",x_" << i;
  for (int i = 0; i < dim_primal; ++i) out << ",v_" << i;
  for (int i = 0; i < dim_dual; ++i) out << ",lambda_" << i;
  out << ",feasibility,obj_residual,pd_gap,dist_minnorm,dist_saddle_x,"
         "dist_saddle_lambda,reg_gap,energy,speed_sq,lemma32_g\n";

  const auto num = [](double v) { return config::format_double(v); };
  const auto opt = [&](const std::optional<double>& v) {
    return v ? num(*v) : std::string();
  };
  for (const TrajectorySample& s : samples) {
    out << num(s.t);
    for (int i = 0; i < dim_primal; ++i) out << ',' << num(s.x(i));
    for (int i = 0; i < dim_primal; ++i) out << ',' << num(s.v(i));
    for (int i = 0; i < dim_dual; ++i) out << ',' << num(s.lambda(i));
    out << ',' << num(s.feasibility) << ',' << opt(s.obj_residual) << ','
        << opt(s.pd_gap) << ',' << opt(s.dist_minnorm) << ','
        << num(s.dist_saddle_x) << ',' << num(s.dist_saddle_lambda) << ','
        << num(s.reg_gap) << ',' << num(s.energy) << ',' << num(s.speed_sq)
        << ',' << num(s.lemma32_g) << '\n';
  }
}

std::vector<TrajectorySample> read_samples_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error("empty CSV");
  std::vector<std::string> cols;
  {
    std::stringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) cols.push_back(col);
  }
  int n = 0, m = 0;
  for (const std::string& c : cols) {
    if (c.rfind("x_", 0) == 0) ++n;
    if (c.rfind("lambda_", 0) == 0) ++m;
  }
  const size_t expected = 1 + 2 * static_cast<size_t>(n) + static_cast<size_t>(m) + 10;
  if (cols.size() != expected) throw Error("unexpected CSV column count");

  std::vector<TrajectorySample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    f.resize(expected);  // trailing empty fields

    const auto num = [&](size_t i) { return std::strtod(f[i].c_str(), nullptr); };
    const auto opt = [&](size_t i) -> std::optional<double> {
      if (f[i].empty()) return std::nullopt;
      return num(i);
    };
    TrajectorySample s;
    size_t k = 0;
    s.t = num(k++);
    s.x = Vector(n);
    for (int i = 0; i < n; ++i) s.x(i) = num(k++);
    s.v = Vector(n);
    for (int i = 0; i < n; ++i) s.v(i) = num(k++);
    s.lambda = Vector(m);
    for (int i = 0; i < m; ++i) s.lambda(i) = num(k++);
    s.feasibility = num(k++);
    s.obj_residual = opt(k++);
    s.pd_gap = opt(k++);
    s.dist_minnorm = opt(k++);
    s.dist_saddle_x = num(k++);
    s.dist_saddle_lambda = num(k++);
    s.reg_gap = num(k++);
    s.energy = num(k++);
    s.speed_sq = num(k++);
    s.lemma32_g = num(k++);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace pdflow
