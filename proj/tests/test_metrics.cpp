#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pdflow/errors.hpp"
#include "pdflow/metrics.hpp"

using namespace pdflow;

namespace {

ParameterSet exp1_params() {
  ParameterSet p;
  p.alpha = 3.0;
  p.theta = 1.0;
  p.c = 0.1;
  p.p = 0.5;
  p.q = 0.0;
  p.s = 0.5;
  return p;
}

Trajectory integrate_main(const ProblemInstance& inst, const ParameterSet& params,
                          double t_end, int n_samples) {
  const int n = inst.dim_primal, m = inst.dim_dual;
  const Rhs rhs = [&inst, &params, n, m](double t, const Vector& y, Vector& dy) {
    const FlowState d = rhs_main(inst, params, t, unflatten(n, m, y));
    dy.resize(y.size());
    dy << d.x, d.v, d.lambda;
  };
  Vector y0(2 * n + m);
  y0 << 1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0;
  IntegratorConfig cfg;
  cfg.sample_grid = make_log_grid(params.t0, t_end, n_samples);
  return integrate(rhs, params.t0, t_end, y0, cfg);
}

// Synthetic sample carrying a prescribed primal state on the reference
// constraint so that theta t^{2q+s} (Ax - b) takes a chosen value.
std::vector<TrajectorySample> synthetic_scaled_feasibility(
    const ParameterSet& params, const std::function<double(double)>& g_target,
    double t0, double t_end, int n) {
  std::vector<TrajectorySample> out;
  for (double t : make_log_grid(t0, t_end, n)) {
    TrajectorySample s;
    s.t = t;
    s.x = Vector::Zero(3);
    s.x(0) = 2.0 + g_target(t) / (params.theta * std::pow(t, 2.0 * params.q + params.s));
    s.v = Vector::Zero(3);
    s.lambda = Vector::Zero(1);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TrajectorySample> power_law_samples(
    const std::function<double(double)>& f, double t0, double t_end, int n) {
  std::vector<TrajectorySample> out;
  for (double t : make_log_grid(t0, t_end, n)) {
    TrajectorySample s;
    s.t = t;
    s.feasibility = f(t);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("energy vanishes at the frozen saddle") {
  const ProblemInstance inst = build_reference_problem();
  const ParameterSet params = exp1_params();
  for (double t : {1.0, 10.0, 1e3}) {
    const SaddlePoint sp = solve_saddle(inst, params.schedule(), t);
    const FlowState frozen{sp.x, Vector::Zero(3), sp.lambda};
    CHECK(std::abs(energy(inst, params, t, frozen, sp)) <= 1e-12);
  }
}

TEST_CASE("energy distance coefficient at q = 0 is (alpha theta - 1)/2") {
  const ProblemInstance inst = build_reference_problem();
  const ParameterSet params = exp1_params();  // alpha = 3, theta = 1
  const double t = 7.0;
  const SaddlePoint sp = solve_saddle(inst, params.schedule(), t);

  Vector d(3);
  d << 0.3, -0.1, 0.2;
  const FlowState state{Vector(sp.x + d), Vector::Zero(3), sp.lambda};
  const double reg_gap =
      regularized_lagrangian(inst, params.schedule(), t, state.x, sp.lambda) -
      regularized_lagrangian(inst, params.schedule(), t, sp.x, sp.lambda);
  const double e = energy(inst, params, t, state, sp);
  // theta^2 t^{2q+s} reg_gap + 1/2|d|^2 + (alpha theta - 1)/2 |d|^2.
  CHECK(e - std::pow(t, 0.5) * reg_gap ==
        doctest::Approx(1.5 * d.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("energy matches a term-by-term recomputation") {
  const ProblemInstance inst = build_reference_problem();
  const ParameterSet params = exp1_params();
  const double t = 1.0;
  const SaddlePoint sp = solve_saddle(inst, params.schedule(), t);

  FlowState state;
  state.x = (Vector(3) << 1.0, -1.0, 1.0).finished();
  state.v = Vector::Ones(3);
  state.lambda = Vector::Constant(1, 1.0);

  const double tq = std::pow(t, params.q);
  const double term1 =
      params.theta * params.theta * std::pow(t, 2.0 * params.q + params.s) *
      (regularized_lagrangian(inst, params.schedule(), t, state.x, sp.lambda) -
       regularized_lagrangian(inst, params.schedule(), t, sp.x, sp.lambda));
  const double term2 =
      0.5 * (state.x - sp.x + params.theta * tq * state.v).squaredNorm();
  const double term3 = 0.5 *
                       (params.alpha * params.theta - 1.0 -
                        params.theta * params.q * std::pow(t, params.q - 1.0)) *
                       (state.x - sp.x).squaredNorm();
  const double term4 =
      0.5 * params.theta * (state.lambda - sp.lambda).squaredNorm();

  CHECK(energy(inst, params, t, state, sp) ==
        doctest::Approx(term1 + term2 + term3 + term4).epsilon(1e-12));

  const SaddlePoint other = solve_saddle(inst, params.schedule(), 2.0);
  CHECK_THROWS_AS(energy(inst, params, t, state, other), TimeMismatch);
}

TEST_CASE("metrics at the minimum-norm solution are all zero") {
  const ProblemInstance inst = build_reference_problem();
  const ParameterSet params = exp1_params();
  Trajectory traj;
  traj.times = {1.0, 10.0};
  Vector y(7);
  y << inst.oracle->min_norm_primal, Vector::Zero(3), inst.oracle->min_norm_dual;
  traj.states = {y, y};
  const auto samples =
      sample_metrics(inst, params, traj, StateLayout{3, 1, false});
  for (const TrajectorySample& s : samples) {
    CHECK(s.feasibility <= 1e-14);
    CHECK(std::abs(*s.obj_residual) <= 1e-14);
    CHECK(std::abs(*s.pd_gap) <= 1e-14);
    CHECK(*s.dist_minnorm <= 1e-14);
    CHECK(s.speed_sq == 0.0);
  }
}

TEST_CASE("gap chain inequalities hold along a real run") {
  const ProblemInstance inst = build_reference_problem();
  const ParameterSet params = exp1_params();
  const auto samples = sample_metrics(
      inst, params, integrate_main(inst, params, 50.0, 60), StateLayout{3, 1, false});
  const double lam_star = inst.oracle->min_norm_dual.norm();
  for (const TrajectorySample& s : samples) {
    CHECK(*s.pd_gap >= -1e-10);
    CHECK(*s.obj_residual <= *s.pd_gap + lam_star * s.feasibility + 1e-10);
    CHECK(s.reg_gap >= -1e-10);
    CHECK(s.energy >= -1e-9);
  }
}

TEST_CASE("rate fit recovers exact power laws") {
  const auto samples =
      power_law_samples([](double t) { return 7.0 * std::pow(t, -1.5); }, 1.0,
                        1e4, 60);
  const RateEstimate est = fit_rate(samples, "feasibility", 1.0, 1e4);
  CHECK(est.fitted_exponent == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(est.r_squared >= 1.0 - 1e-12);
  CHECK(est.n_points == 60);
}

TEST_CASE("rate fit tolerates oscillating prefactors") {
  // Roughly three oscillation periods inside the fit window; a single
  // incomplete period would bias the slope by ~0.24.
  const auto samples = power_law_samples(
      [](double t) { return (2.0 + std::sin(4.0 * std::log(t))) / t; }, 1.0,
      1e4, 200);
  const RateEstimate est = fit_rate(samples, "feasibility", 1e2, 1e4);
  CHECK(std::abs(est.fitted_exponent - 1.0) <= 0.1);
}

TEST_CASE("rate fit of a constant is flat") {
  const auto samples =
      power_law_samples([](double) { return 3.0; }, 1.0, 1e3, 40);
  CHECK(std::abs(fit_rate(samples, "feasibility", 1.0, 1e3).fitted_exponent) <=
        1e-12);
}

TEST_CASE("rate fit error conditions") {
  const auto few =
      power_law_samples([](double t) { return 1.0 / t; }, 1.0, 1e3, 5);
  CHECK_THROWS_AS(fit_rate(few, "feasibility", 1.0, 1e3), InsufficientSamples);

  auto zeros = power_law_samples([](double) { return 0.0; }, 1.0, 1e3, 40);
  CHECK_THROWS_AS(fit_rate(zeros, "feasibility", 1.0, 1e3), NonPositiveValues);

  const auto fine =
      power_law_samples([](double t) { return 1.0 / t; }, 1.0, 1e3, 40);
  CHECK_THROWS_AS(fit_rate(fine, "feasibility", 10.0, 2.0), BadSpan);
  CHECK_THROWS_AS(fit_rate(fine, "unknown_quantity", 1.0, 1e3), Error);
}

TEST_CASE("predicted exponents match direct substitution") {
  SUBCASE("gap-optimal settings") {
    const RatePrediction pred = predict_rates(exp1_params());
    for (const auto& [name, e] : pred) {
      if (name == "feasibility") CHECK(e == doctest::Approx(0.5));
      if (name == "obj_residual") CHECK(e == doctest::Approx(0.5));
      if (name == "reg_gap") CHECK(e == doctest::Approx(1.0));
    }
  }
  SUBCASE("improved slow regime") {
    ParameterSet params = exp1_params();
    params.q = 0.1;
    params.p = 0.6;
    params.s = 0.65;
    const RatePrediction pred = predict_rates(params);
    bool saw_dist = false, saw_gap = false, saw_lambda = false;
    for (const auto& [name, e] : pred) {
      if (name == "dist_saddle_x_sq") {
        CHECK(e == doctest::Approx(0.3));
        saw_dist = true;
      }
      if (name == "pd_gap") {
        CHECK(e == doctest::Approx(0.15));
        saw_gap = true;
      }
      if (name == "dist_saddle_lambda_sq") {
        CHECK(e == doctest::Approx(0.05));  // no improvement for the dual block
        saw_lambda = true;
      }
    }
    CHECK(saw_dist);
    CHECK(saw_gap);
    CHECK(saw_lambda);
  }
  SUBCASE("fast saddle tracking") {
    ParameterSet params = exp1_params();
    params.q = 0.0;
    params.p = 0.6;
    params.s = -0.35;
    const RatePrediction pred = predict_rates(params);
    bool saw_dist = false;
    for (const auto& [name, e] : pred) {
      if (name == "dist_saddle_x_sq") {
        CHECK(e == doctest::Approx(0.1));
        saw_dist = true;
      }
      CHECK(name != "reg_gap");  // below the extra-clause threshold
      CHECK(name != "pd_gap");
      if (name == "feasibility") CHECK(e == doctest::Approx(0.05));
    }
    CHECK(saw_dist);
  }
  SUBCASE("out of theory") {
    ParameterSet params = exp1_params();
    params.p = 0.2;
    params.s = -0.95;
    CHECK_THROWS_AS(predict_rates(params), OutOfTheory);
  }
}

TEST_CASE("predictions are consistent with the regime tags") {
  for (double q : {0.0, 0.1, 0.25}) {
    for (double p : {0.2, 0.4, 0.6}) {
      for (double s : {-0.5, -0.2, 0.1, 0.4, 0.8}) {
        ParameterSet params = exp1_params();
        params.q = q;
        params.p = p;
        params.s = s;
        const RegimeClassification regime = classify_regime(params);
        if (regime.out_of_theory()) {
          CHECK_THROWS_AS(predict_rates(params), OutOfTheory);
          continue;
        }
        const RatePrediction pred = predict_rates(params);
        CHECK(!pred.empty());
        const bool dist_possible = regime.has(Regime::FastSaddleTracking) ||
                                   regime.has(Regime::SlowRegime) ||
                                   regime.has(Regime::ImprovedSlowRegime);
        for (const auto& [name, e] : pred) {
          CHECK(std::isfinite(e));
          if (name == "dist_saddle_x_sq") CHECK(dist_possible);
          if (name == "reg_gap")
            CHECK((regime.has(Regime::SlowRegime) ||
                   regime.has(Regime::FastSaddleTracking)));
        }
      }
    }
  }
}

TEST_CASE("scaled feasibility check on synthetic data") {
  const ProblemInstance inst = build_reference_problem();
  const ParameterSet params = exp1_params();
  SUBCASE("identically feasible trajectory") {
    const auto samples = synthetic_scaled_feasibility(
        params, [](double) { return 0.0; }, 1.0, 1e3, 200);
    const ScaledFeasibilityBound out =
        check_scaled_feasibility_bounded(inst, params, samples, 1.0);
    CHECK(out.sup_g <= 1e-12);
    CHECK(out.sup_corrected <= 1e-12);
    CHECK(out.bounded);
  }
  SUBCASE("decaying scaled violation is bounded") {
    const auto samples = synthetic_scaled_feasibility(
        params, [](double t) { return std::pow(t, -0.3); }, 1.0, 1e3, 200);
    CHECK(check_scaled_feasibility_bounded(inst, params, samples, 1.0).bounded);
  }
  SUBCASE("growing control case is flagged unbounded") {
    const auto samples = synthetic_scaled_feasibility(
        params, [](double t) { return std::pow(t, 0.2); }, 1.0, 1e3, 200);
    CHECK_FALSE(check_scaled_feasibility_bounded(inst, params, samples, 1.0).bounded);
  }
  SUBCASE("doubling the grid density moves the sups by under 1%") {
    const auto g = [](double t) { return std::pow(t, -0.3) + 0.5; };
    const auto coarse = synthetic_scaled_feasibility(params, g, 1.0, 1e3, 200);
    const auto fine = synthetic_scaled_feasibility(params, g, 1.0, 1e3, 400);
    const ScaledFeasibilityBound a =
        check_scaled_feasibility_bounded(inst, params, coarse, 1.0);
    const ScaledFeasibilityBound b =
        check_scaled_feasibility_bounded(inst, params, fine, 1.0);
    CHECK(std::abs(a.sup_corrected - b.sup_corrected) <= 0.01 * b.sup_corrected);
  }
  SUBCASE("misconfigured exponents are rejected") {
    ParameterSet bad = params;
    bad.s = -2.0;  // p - q - s > 1
    const auto samples = synthetic_scaled_feasibility(
        bad, [](double) { return 0.0; }, 1.0, 1e3, 50);
    CHECK_THROWS_AS(check_scaled_feasibility_bounded(inst, bad, samples, 1.0),
                    ExponentOverflow);
  }
}

TEST_CASE("integral sup-bound batteries") {
  const auto certify = [](SupBoundKernel kernel, double delta, double mu,
                          double nu, const std::function<double(double)>& a_fn,
                          const std::function<double(double)>& g_fn,
                          double t_end) {
    const SupBoundCheck probe =
        check_integral_sup_bound(kernel, delta, mu, nu, a_fn, g_fn, 1e300, t_end);
    return check_integral_sup_bound(kernel, delta, mu, nu, a_fn, g_fn,
                                    probe.corrected_sup, t_end);
  };

  SUBCASE("zero kernel, constant g") {
    const SupBoundCheck r = certify(
        SupBoundKernel::Nonnegative, 1.0, 0.0, 0.0, [](double) { return 0.0; },
        [](double) { return 3.0; }, 25.0);
    CHECK(r.verified());
    CHECK(r.sup_g == doctest::Approx(3.0));
    CHECK(r.bound == doctest::Approx(6.0));
  }
  SUBCASE("exponential damping, decaying g") {
    const SupBoundCheck r = certify(
        SupBoundKernel::Nonnegative, 0.5, 1.0, 1.0, [](double) { return 1.0; },
        [](double t) { return std::exp(-t); }, 25.0);
    CHECK(r.verified());
    CHECK(r.sup_g == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
  }
  SUBCASE("nonpositive kernel with c0 in (-1, 0)") {
    const SupBoundCheck r = certify(
        SupBoundKernel::Nonpositive, 0.5, 0.0, 0.0,
        [](double t) { return -std::exp(-t); },
        [](double t) { return 2.0 + std::sin(t); }, 25.0);
    CHECK(r.verified());
    CHECK(r.c0 > -1.0);
    CHECK(r.c0 < 0.0);
  }
  SUBCASE("understated certificate fails the hypothesis") {
    const SupBoundCheck r = check_integral_sup_bound(
        SupBoundKernel::Nonnegative, 1.0, 0.0, 0.0, [](double) { return 0.0; },
        [](double) { return 3.0; }, 1.0, 25.0);
    CHECK_FALSE(r.hypothesis_ok);
    CHECK_FALSE(r.conclusion_ok);  // sup|g| = 3 exceeds the claimed bound 2
    CHECK(r.bound == doctest::Approx(2.0));
  }
  SUBCASE("spiked g defeats the coarse grid but not the refined sup") {
    const SupBoundCheck r = check_integral_sup_bound(
        SupBoundKernel::Nonnegative, 1.0, 0.0, 0.0, [](double) { return 0.0; },
        [](double t) {
          const double d = (t - 1.005) / 0.001;
          return 0.1 + 5.0 * std::exp(-d * d);
        },
        0.11, 2.0, 101);
    CHECK(r.hypothesis_ok);
    CHECK_FALSE(r.conclusion_ok);
    CHECK(r.sup_g >= 5.0);
  }
  SUBCASE("wrong kernel sign fails the hypothesis") {
    const SupBoundCheck r = check_integral_sup_bound(
        SupBoundKernel::Nonpositive, 1.0, 0.0, 0.0, [](double) { return 1.0; },
        [](double) { return 1.0; }, 10.0, 25.0);
    CHECK_FALSE(r.hypothesis_ok);
  }
}

TEST_CASE("trajectory CSV schema and round trip") {
  const ProblemInstance inst = build_reference_problem();
  const ParameterSet params = exp1_params();
  auto samples = sample_metrics(inst, params, integrate_main(inst, params, 30.0, 20),
                                StateLayout{3, 1, false});
  // One sample with the oracle-dependent fields absent.
  samples.push_back(samples.back());
  samples.back().t *= 1.001;
  samples.back().obj_residual.reset();
  samples.back().pd_gap.reset();
  samples.back().dist_minnorm.reset();

  std::ostringstream out;
  write_samples_csv(out, samples, 3, 1);
  const std::string text = out.str();
  CHECK(text.rfind("t,x_0,x_1,x_2,v_0,v_1,v_2,lambda_0,feasibility,obj_residual,"
                   "pd_gap,dist_minnorm,dist_saddle_x,dist_saddle_lambda,"
                   "reg_gap,energy,speed_sq,lemma32_g\n",
                   0) == 0);

  std::istringstream in(text);
  const auto back = read_samples_csv(in);
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].t == samples[i].t);
    CHECK((back[i].x - samples[i].x).norm() == 0.0);
    CHECK((back[i].v - samples[i].v).norm() == 0.0);
    CHECK((back[i].lambda - samples[i].lambda).norm() == 0.0);
    CHECK(back[i].feasibility == samples[i].feasibility);
    CHECK(back[i].obj_residual.has_value() == samples[i].obj_residual.has_value());
    if (samples[i].obj_residual)
      CHECK(*back[i].obj_residual == *samples[i].obj_residual);
    CHECK(back[i].energy == samples[i].energy);
    CHECK(back[i].lemma32_g == samples[i].lemma32_g);
  }
}
