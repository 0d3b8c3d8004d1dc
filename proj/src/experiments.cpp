#include "pdflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "pdflow/errors.hpp"

namespace fs = std::filesystem;

namespace pdflow {

namespace {

using config::Document;
using config::format_double;
using config::format_vector;

const char* const kFitQuantities[] = {
    "feasibility",      "obj_residual",          "pd_gap",
    "reg_gap",          "dist_saddle_x_sq",      "dist_saddle_lambda_sq",
    "speed_sq",         "dist_minnorm"};

const char* const kSpecKeys[] = {
    "instance", "system", "alpha", "theta", "c",        "p",
    "q",        "s",      "t0",    "rho",   "kappa",    "x0",
    "v0",       "lambda0", "lambda_dot0",   "t_end",    "samples",
    "rtol",     "atol",   "h_init", "h_min", "h_max",   "max_steps",
    "fit_t_lo", "fit_t_hi", "out", "workers", "seed"};

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string regime_string(const RegimeClassification& regime) {
  if (regime.out_of_theory()) return "OutOfTheory";
  std::string s;
  for (Regime tag : regime.tags) {
    if (!s.empty()) s += ' ';
    s += to_string(tag);
  }
  return s;
}

}  // namespace

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::Main: return "main";
    case SystemKind::Chbani: return "chbani";
    case SystemKind::HeOde: return "heode";
  }
  return "?";
}

SystemKind system_from_string(const std::string& name) {
  if (name == "main") return SystemKind::Main;
  if (name == "chbani") return SystemKind::Chbani;
  if (name == "heode") return SystemKind::HeOde;
  throw ConfigInvalid("unknown system '" + name + "' (main | chbani | heode)");
}

ExperimentSpec default_spec() {
  ExperimentSpec spec;
  spec.x0 = Vector(3);
  spec.x0 << 1.0, -1.0, 1.0;
  spec.v0 = Vector(3);
  spec.v0 << 1.0, 1.0, 1.0;
  spec.lambda0 = Vector(1);
  spec.lambda0 << 1.0;
  spec.lambda_dot0 = Vector(1);
  spec.lambda_dot0 << 1.0;
  return spec;
}

config::Document spec_to_document(const ExperimentSpec& spec) {
  Document doc;
  doc.set("instance", spec.instance_ref);
  doc.set("system", to_string(spec.system));
  doc.set("alpha", format_double(spec.params.alpha));
  doc.set("theta", format_double(spec.params.theta));
  doc.set("c", format_double(spec.params.c));
  doc.set("p", format_double(spec.params.p));
  doc.set("q", format_double(spec.params.q));
  doc.set("s", format_double(spec.params.s));
  doc.set("t0", format_double(spec.params.t0));
  doc.set("rho", format_double(spec.rho));
  doc.set("kappa", format_double(spec.resolved_kappa()));
  doc.set("x0", format_vector(spec.x0));
  doc.set("v0", format_vector(spec.v0));
  doc.set("lambda0", format_vector(spec.lambda0));
  doc.set("lambda_dot0", format_vector(spec.lambda_dot0));
  doc.set("t_end", format_double(spec.t_end));
  doc.set("samples", std::to_string(spec.samples));
  doc.set("rtol", format_double(spec.integrator.rtol));
  doc.set("atol", format_double(spec.integrator.atol));
  doc.set("h_init", format_double(spec.integrator.h_init));
  doc.set("h_min", format_double(spec.integrator.h_min));
  doc.set("h_max", format_double(spec.integrator.h_max));
  doc.set("max_steps", std::to_string(spec.integrator.max_steps));
  doc.set("fit_t_lo", format_double(spec.fit_t_lo));
  doc.set("fit_t_hi", format_double(spec.fit_t_hi));
  doc.set("out", spec.out_dir);
  doc.set("workers", std::to_string(spec.workers));
  doc.set("seed", std::to_string(spec.seed));
  return doc;
}

ExperimentSpec decode_spec(const config::Document& doc) {
  for (const auto& [key, value] : doc.entries()) {
    bool known = false;
    for (const char* k : kSpecKeys) known = known || key == k;
    if (!known) throw ConfigInvalid("unknown config key '" + key + "'");
  }

  ExperimentSpec spec = default_spec();
  spec.instance_ref = config::get_string_or(doc, "instance", spec.instance_ref);
  spec.system =
      system_from_string(config::get_string_or(doc, "system", "main"));
  spec.params.alpha = config::get_double_or(doc, "alpha", spec.params.alpha);
  spec.params.theta = config::get_double_or(doc, "theta", spec.params.theta);
  spec.params.c = config::get_double_or(doc, "c", spec.params.c);
  spec.params.p = config::get_double_or(doc, "p", spec.params.p);
  spec.params.q = config::get_double_or(doc, "q", spec.params.q);
  spec.params.s = config::get_double_or(doc, "s", spec.params.s);
  spec.params.t0 = config::get_double_or(doc, "t0", spec.params.t0);
  spec.rho = config::get_double_or(doc, "rho", spec.rho);
  if (doc.has("kappa")) spec.kappa = config::get_double(doc, "kappa");
  spec.x0 = config::get_vector_or(doc, "x0", spec.x0);
  spec.v0 = config::get_vector_or(doc, "v0", spec.v0);
  spec.lambda0 = config::get_vector_or(doc, "lambda0", spec.lambda0);
  spec.lambda_dot0 = config::get_vector_or(doc, "lambda_dot0", spec.lambda_dot0);
  spec.t_end = config::get_double_or(doc, "t_end", spec.t_end);
  spec.samples = static_cast<int>(config::get_long_or(doc, "samples", spec.samples));
  spec.integrator.rtol = config::get_double_or(doc, "rtol", spec.integrator.rtol);
  spec.integrator.atol = config::get_double_or(doc, "atol", spec.integrator.atol);
  spec.integrator.h_init = config::get_double_or(doc, "h_init", 0.0);
  spec.integrator.h_min = config::get_double_or(doc, "h_min", spec.integrator.h_min);
  spec.integrator.h_max = config::get_double_or(doc, "h_max", 0.0);
  spec.integrator.max_steps =
      config::get_long_or(doc, "max_steps", spec.integrator.max_steps);
  spec.fit_t_lo = config::get_double_or(doc, "fit_t_lo", 0.0);
  spec.fit_t_hi = config::get_double_or(doc, "fit_t_hi", 0.0);
  spec.out_dir = config::get_string_or(doc, "out", spec.out_dir);
  spec.workers = static_cast<int>(config::get_long_or(doc, "workers", spec.workers));
  spec.seed = static_cast<unsigned>(config::get_long_or(doc, "seed", spec.seed));

  // The constant-damping system is the q = 0, s = p member of the family;
  // normalize so metrics and classification agree with what is integrated.
  if (spec.system == SystemKind::Chbani) {
    spec.params.q = 0.0;
    spec.params.s = spec.params.p;
  }

  validate_parameters(spec.params);
  if (!(spec.t_end > spec.params.t0))
    throw ConfigInvalid("t_end must exceed t0");
  if (spec.samples < 10) throw ConfigInvalid("samples must be at least 10");
  if (spec.workers < 1) throw ConfigInvalid("workers must be at least 1");
  return spec;
}

std::string run_id(const ExperimentSpec& spec) {
  const Document doc = spec_to_document(spec);
  std::string hashed;
  for (const auto& [k, v] : doc.entries()) {
    if (k == "out" || k == "workers" || k == "seed") continue;
    hashed += k;
    hashed += '=';
    hashed += v;
    hashed += '\n';
  }
  return config::fnv1a_hex(hashed);
}

ProblemInstance resolve_instance(const ExperimentSpec& spec) {
  if (spec.instance_ref == "reference") return build_reference_problem();
  return load_instance(spec.instance_ref);
}

namespace {

Rhs make_flow_rhs(const ProblemInstance& inst, const ExperimentSpec& spec) {
  const int n = inst.dim_primal;
  const int m = inst.dim_dual;
  if (spec.system == SystemKind::HeOde) {
    HeParameters he;
    he.alpha = spec.params.alpha;
    he.theta = spec.params.theta;
    he.rho = spec.rho;
    he.kappa = spec.resolved_kappa();
    he.q = spec.params.q;
    he.s = spec.params.s;
    return [inst, he, n, m](double t, const Vector& y, Vector& dy) {
      const HeFlowState d = rhs_heode(inst, he, t, unflatten_he(n, m, y));
      dy.resize(y.size());
      dy << d.x, d.v, d.lambda, d.mu;
    };
  }
  const ParameterSet params = spec.params;
  const bool chbani = spec.system == SystemKind::Chbani;
  return [inst, params, chbani, n, m](double t, const Vector& y, Vector& dy) {
    const FlowState state = unflatten(n, m, y);
    const FlowState d =
        chbani ? rhs_chbani(inst, params, t, state) : rhs_main(inst, params, t, state);
    dy.resize(y.size());
    dy << d.x, d.v, d.lambda;
  };
}

Vector initial_state(const ProblemInstance& inst, const ExperimentSpec& spec) {
  if (spec.x0.size() != inst.dim_primal || spec.v0.size() != inst.dim_primal ||
      spec.lambda0.size() != inst.dim_dual)
    throw ConfigInvalid("initial state does not match instance dimensions");
  if (spec.system == SystemKind::HeOde) {
    if (spec.lambda_dot0.size() != inst.dim_dual)
      throw ConfigInvalid("lambda_dot0 does not match instance dimensions");
    return flatten(HeFlowState{spec.x0, spec.v0, spec.lambda0, spec.lambda_dot0});
  }
  return flatten(FlowState{spec.x0, spec.v0, spec.lambda0});
}

std::string render_report(const ExperimentSpec& spec, const RunResult& run,
                          double t_lo, double t_hi, const std::string& error,
                          double error_t) {
  std::ostringstream out;
  out << "run_id = " << run.id << '\n';
  out << "instance = " << spec.instance_ref << '\n';
  out << "system = " << to_string(spec.system) << '\n';
  out << "regime_tags = " << regime_string(run.regime) << '\n';
  out << "regime_r = " << format_double(run.regime.r) << '\n';
  out << "assumption1 = " << (run.regime.assumption_ok ? "ok" : "violated") << '\n';
  out << "window_t_lo = " << format_double(t_lo) << '\n';
  out << "window_t_hi = " << format_double(t_hi) << '\n';
  if (!error.empty()) {
    out << "error = " << error << '\n';
    out << "error_t = " << format_double(error_t) << '\n';
  }
  for (const QuantityVerdict& v : run.verdicts) {
    const std::string prefix = "quantity." + v.quantity + ".";
    if (v.fit) {
      out << prefix << "fitted_exponent = " << format_double(v.fit->fitted_exponent)
          << '\n';
      out << prefix << "r_squared = " << format_double(v.fit->r_squared) << '\n';
      out << prefix << "n_points = " << v.fit->n_points << '\n';
    }
    if (v.predicted)
      out << prefix << "predicted_exponent = " << format_double(*v.predicted)
          << '\n';
    out << prefix << "verdict = " << v.verdict << '\n';
    if (!v.note.empty()) out << prefix << "note = " << v.note << '\n';
  }
  if (!run.samples.empty()) {
    const TrajectorySample& first = run.samples.front();
    const TrajectorySample& last = run.samples.back();
    if (first.dist_minnorm) {
      out << "value.dist_minnorm.first = " << format_double(*first.dist_minnorm)
          << '\n';
      out << "value.dist_minnorm.last = " << format_double(*last.dist_minnorm)
          << '\n';
    }
    out << "value.feasibility.first = " << format_double(first.feasibility) << '\n';
    out << "value.feasibility.last = " << format_double(last.feasibility) << '\n';
    if (last.obj_residual)
      out << "value.obj_residual.last = " << format_double(*last.obj_residual)
          << '\n';
  }
  out << "integrator.steps_accepted = " << run.stats.steps_accepted << '\n';
  out << "integrator.steps_rejected = " << run.stats.steps_rejected << '\n';
  out << "integrator.rhs_evaluations = " << run.stats.rhs_evaluations << '\n';
  out << "overall = " << (error.empty() ? (run.pass ? "pass" : "fail") : "error")
      << '\n';
  return out.str();
}

void write_manifest(const std::string& path, const ExperimentSpec& spec,
                    const RunResult& run, const std::string& error) {
  std::ostringstream out;
  out << "# run manifest\n";
  out << "created_unix = " << std::time(nullptr) << '\n';
  out << spec_to_document(spec).dump();
  out << "run_id = " << run.id << '\n';
  out << "steps_accepted = " << run.stats.steps_accepted << '\n';
  out << "steps_rejected = " << run.stats.steps_rejected << '\n';
  out << "rhs_evaluations = " << run.stats.rhs_evaluations << '\n';
  out << "final_step = " << format_double(run.stats.final_step) << '\n';
  if (!error.empty()) out << "error = " << error << '\n';
  write_text_file(path, out.str());
}

}  // namespace

RunResult run_experiment(const ExperimentSpec& spec) {
  validate_parameters(spec.params);
  if (!(spec.t_end > spec.params.t0)) throw ConfigInvalid("t_end must exceed t0");

  const ProblemInstance inst = resolve_instance(spec);
  RunResult run;
  run.id = run_id(spec);
  run.regime = classify_regime(spec.params);

  run.dir = (fs::path(spec.out_dir) / run.id).string();
  fs::create_directories(run.dir);
  run.csv_path = (fs::path(run.dir) / "trajectory.csv").string();
  run.rates_path = (fs::path(run.dir) / "rates.txt").string();

  const double t_lo = spec.fit_t_lo > 0.0 ? spec.fit_t_lo : spec.t_end / 100.0;
  const double t_hi = spec.fit_t_hi > 0.0 ? spec.fit_t_hi : spec.t_end;

  IntegratorConfig cfg = spec.integrator;
  cfg.sample_grid = make_log_grid(spec.params.t0, spec.t_end, spec.samples);

  Trajectory traj;
  try {
    traj = integrate(make_flow_rhs(inst, spec), spec.params.t0, spec.t_end,
                     initial_state(inst, spec), cfg);
  } catch (const IntegrationError& e) {
    run.stats = IntegratorStats{};
    write_text_file(run.rates_path,
                    render_report(spec, run, t_lo, t_hi, e.what(), e.at_time));
    write_manifest((fs::path(run.dir) / "manifest.txt").string(), spec, run,
                   e.what());
    throw;
  }
  run.stats = traj.stats;

  StateLayout layout{inst.dim_primal, inst.dim_dual,
                     spec.system == SystemKind::HeOde};
  run.samples = sample_metrics(inst, spec.params, traj, layout);

  // Predictions apply to the main family; the comparison flow is reported
  // without pass/fail thresholds.
  RatePrediction predictions;
  const bool predictable = spec.system != SystemKind::HeOde &&
                           !run.regime.out_of_theory() && run.regime.assumption_ok;
  if (predictable) predictions = predict_rates(spec.params);

  for (const char* name : kFitQuantities) {
    QuantityVerdict v;
    v.quantity = name;
    for (const auto& [k, e] : predictions)
      if (k == name) v.predicted = e;
    try {
      v.fit = fit_rate(run.samples, name, t_lo, t_hi);
    } catch (const InsufficientSamples& e) {
      v.note = std::string("InsufficientSamples: ") + e.what();
    } catch (const NonPositiveValues& e) {
      v.note = std::string("NonPositiveValues: ") + e.what();
    }
    if (v.fit && v.predicted) {
      // One-sided rule: the predictions are upper bounds, so the observed
      // decay must be at least as fast as predicted minus tolerance.
      v.verdict = v.fit->fitted_exponent >= *v.predicted - 0.15 ? "pass" : "fail";
    } else {
      v.verdict = "informational";
    }
    if (v.verdict == "fail") run.pass = false;
    run.verdicts.push_back(std::move(v));
  }

  {
    std::ofstream csv(run.csv_path, std::ios::binary);
    if (!csv) throw Error("cannot write '" + run.csv_path + "'");
    write_samples_csv(csv, run.samples, inst.dim_primal, inst.dim_dual);
  }
  write_text_file(run.rates_path,
                  render_report(spec, run, t_lo, t_hi, "", 0.0));

  const std::vector<PlotSeries> series{{to_string(spec.system), &run.samples}};
  const std::vector<std::pair<std::string, std::vector<std::string>>> groups{
      {"errors", {"dist_minnorm", "obj_residual", "feasibility"}},
      {"saddle", {"dist_saddle_x", "dist_saddle_lambda", "reg_gap", "speed_sq"}}};
  for (const auto& [group, quantities] : groups) {
    const std::string path = (fs::path(run.dir) / ("plot_" + group + ".svg")).string();
    try {
      emit_plot(series, quantities, predictions, path);
      run.plot_paths.push_back(path);
    } catch (const NothingToPlot&) {
      // group has no positive data (e.g. oracle-free instance); skip file
    }
  }

  write_manifest((fs::path(run.dir) / "manifest.txt").string(), spec, run, "");
  return run;
}

SweepResult run_sweep(const ExperimentSpec& base, const std::string& axis,
                      const std::vector<double>& values) {
  if (axis != "q" && axis != "p" && axis != "s" && axis != "c" &&
      axis != "alpha" && axis != "theta")
    throw ConfigInvalid("sweep axis must be one of q, p, s, c, alpha, theta");
  if (values.empty()) throw ConfigInvalid("sweep needs at least one value");

  std::vector<double> ordered = values;
  std::sort(ordered.begin(), ordered.end());

  SweepResult sweep;
  sweep.axis = axis;
  sweep.cells.resize(ordered.size());

  std::atomic<size_t> next{0};
  auto work = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= ordered.size()) break;
      SweepCell& cell = sweep.cells[i];
      cell.value = ordered[i];
      ExperimentSpec spec = base;
      if (axis == "q") spec.params.q = cell.value;
      else if (axis == "p") spec.params.p = cell.value;
      else if (axis == "s") spec.params.s = cell.value;
      else if (axis == "c") spec.params.c = cell.value;
      else if (axis == "alpha") spec.params.alpha = cell.value;
      else spec.params.theta = cell.value;
      try {
        cell.result = run_experiment(spec);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(base.workers, static_cast<int>(ordered.size())));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }

  std::ostringstream out;
  out << "axis = " << axis << '\n';
  out << "value\tregime\tr\tquantity\tfitted\tpredicted\tr2\tverdict\n";
  for (const SweepCell& cell : sweep.cells) {
    if (!cell.result) {
      out << fmt6(cell.value) << "\tERROR\t-\t-\t-\t-\t-\t" << cell.error << '\n';
      continue;
    }
    const RunResult& run = *cell.result;
    const std::string regime = regime_string(run.regime);
    for (const QuantityVerdict& v : run.verdicts) {
      out << fmt6(cell.value) << '\t' << regime << '\t' << fmt6(run.regime.r)
          << '\t' << v.quantity << '\t'
          << (v.fit ? fmt6(v.fit->fitted_exponent) : std::string("-")) << '\t'
          << (v.predicted ? fmt6(*v.predicted) : std::string("-")) << '\t'
          << (v.fit ? fmt6(v.fit->r_squared) : std::string("-")) << '\t'
          << v.verdict << '\n';
    }
  }
  sweep.summary_text = out.str();

  fs::create_directories(base.out_dir);
  sweep.summary_path = (fs::path(base.out_dir) / "sweep_summary.txt").string();
  write_text_file(sweep.summary_path, sweep.summary_text);

  // Combined error panels, one curve per cell.
  std::vector<PlotSeries> series;
  for (const SweepCell& cell : sweep.cells)
    if (cell.result)
      series.push_back({axis + "=" + fmt6(cell.value), &cell.result->samples});
  if (!series.empty()) {
    const std::string path =
        (fs::path(base.out_dir) / "sweep_plot_errors.svg").string();
    try {
      emit_plot(series, {"dist_minnorm", "obj_residual", "feasibility"}, {}, path);
      sweep.plot_path = path;
    } catch (const NothingToPlot&) {
    }
  }
  return sweep;
}

namespace {

constexpr double kPanelW = 320.0;
constexpr double kPanelH = 300.0;
constexpr double kMarginL = 56.0;
constexpr double kMarginR = 14.0;
constexpr double kMarginT = 30.0;
constexpr double kMarginB = 42.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                "#9467bd", "#ff7f0e", "#8c564b"};

std::string px(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12f", v);
  return buf;
}

struct PanelPoints {
  std::string quantity;
  // one point list per series (possibly empty)
  std::vector<std::vector<std::pair<double, double>>> logs;  // (log10 t, log10 v)
};

}  // namespace

void emit_plot(const std::vector<PlotSeries>& series,
               const std::vector<std::string>& quantities,
               const RatePrediction& guides, const std::string& path) {
  if (quantities.empty()) throw NothingToPlot("no quantities selected");

  std::vector<PanelPoints> panels;
  for (const std::string& q : quantities) {
    PanelPoints panel;
    panel.quantity = q;
    bool any = false;
    for (const PlotSeries& ser : series) {
      std::vector<std::pair<double, double>> pts;
      for (const TrajectorySample& smp : *ser.samples) {
        const std::optional<double> v = sample_quantity(smp, q);
        if (v && *v > 0.0 && smp.t > 0.0)
          pts.emplace_back(std::log10(smp.t), std::log10(*v));
      }
      if (pts.size() >= 2) any = true;
      panel.logs.push_back(std::move(pts));
    }
    if (any) panels.push_back(std::move(panel));
  }
  if (panels.empty())
    throw NothingToPlot("no quantity has two positive samples");

  const double width = kPanelW * static_cast<double>(panels.size());
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << kPanelH << "\" viewBox=\"0 0 " << width << ' '
      << kPanelH << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << kPanelH
      << "\" fill=\"white\"/>\n";

  for (size_t pi = 0; pi < panels.size(); ++pi) {
    const PanelPoints& panel = panels[pi];
    const double ox = kPanelW * static_cast<double>(pi) + kMarginL;
    const double oy = kMarginT;
    const double pw = kPanelW - kMarginL - kMarginR;
    const double ph = kPanelH - kMarginT - kMarginB;

    double lt_min = 1e300, lt_max = -1e300, lv_min = 1e300, lv_max = -1e300;
    for (const auto& pts : panel.logs)
      for (const auto& [lt, lv] : pts) {
        lt_min = std::min(lt_min, lt);
        lt_max = std::max(lt_max, lt);
        lv_min = std::min(lv_min, lv);
        lv_max = std::max(lv_max, lv);
      }
    if (lt_max - lt_min < 1e-12) {
      lt_min -= 0.5;
      lt_max += 0.5;
    }
    const double pad = std::max(0.05 * (lv_max - lv_min), 0.5);
    lv_min -= pad;
    lv_max += pad;

    const auto X = [&](double lt) {
      return ox + (lt - lt_min) / (lt_max - lt_min) * pw;
    };
    const auto Y = [&](double lv) {
      return oy + (lv_max - lv) / (lv_max - lv_min) * ph;
    };

    svg << "<rect x=\"" << px(ox) << "\" y=\"" << px(oy) << "\" width=\""
        << px(pw) << "\" height=\"" << px(ph)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << px(ox) << "\" y=\"" << px(oy - 10.0)
        << "\" font-family=\"monospace\" font-size=\"12\">" << panel.quantity
        << "</text>\n";
    svg << "<text x=\"" << px(ox + pw / 2.0) << "\" y=\"" << px(oy + ph + 30.0)
        << "\" font-family=\"monospace\" font-size=\"11\">t</text>\n";

    for (int k = static_cast<int>(std::ceil(lt_min));
         k <= static_cast<int>(std::floor(lt_max)); ++k) {
      const double x = X(static_cast<double>(k));
      svg << "<line x1=\"" << px(x) << "\" y1=\"" << px(oy) << "\" x2=\"" << px(x)
          << "\" y2=\"" << px(oy + ph)
          << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
      svg << "<text x=\"" << px(x - 10.0) << "\" y=\"" << px(oy + ph + 14.0)
          << "\" font-family=\"monospace\" font-size=\"10\">1e" << k
          << "</text>\n";
    }
    for (int k = static_cast<int>(std::ceil(lv_min));
         k <= static_cast<int>(std::floor(lv_max)); ++k) {
      const double y = Y(static_cast<double>(k));
      svg << "<line x1=\"" << px(ox) << "\" y1=\"" << px(y) << "\" x2=\""
          << px(ox + pw) << "\" y2=\"" << px(y)
          << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
      svg << "<text x=\"" << px(ox - 40.0) << "\" y=\"" << px(y + 3.0)
          << "\" font-family=\"monospace\" font-size=\"10\">1e" << k
          << "</text>\n";
    }

    for (size_t si = 0; si < panel.logs.size(); ++si) {
      const auto& pts = panel.logs[si];
      if (pts.size() < 2) continue;
      svg << "<polyline fill=\"none\" stroke=\"" << kPalette[si % 6]
          << "\" stroke-width=\"1.2\" points=\"";
      for (size_t i = 0; i < pts.size(); ++i) {
        if (i) svg << ' ';
        svg << px(X(pts[i].first)) << ',' << px(Y(pts[i].second));
      }
      svg << "\"/>\n";
    }

    for (const auto& [gq, beta] : guides) {
      if (gq != panel.quantity) continue;
      const auto& anchor_pts = panel.logs.front();
      if (anchor_pts.size() < 2) break;
      const auto [lt1, lv1] = anchor_pts.back();
      const double lt0 = std::max(lt_min, lt1 - 2.0);
      const double lv0 = lv1 + beta * (lt1 - lt0);
      svg << "<line x1=\"" << px(X(lt0)) << "\" y1=\"" << px(Y(lv0)) << "\" x2=\""
          << px(X(lt1)) << "\" y2=\"" << px(Y(lv1))
          << "\" stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
      svg << "<text x=\"" << px(X(lt0) + 4.0) << "\" y=\"" << px(Y(lv0) - 4.0)
          << "\" font-family=\"monospace\" font-size=\"10\" fill=\"#888888\">slope -"
          << fmt6(beta) << "</text>\n";
    }

    if (pi == 0 && series.size() > 1) {
      for (size_t si = 0; si < series.size(); ++si) {
        svg << "<text x=\"" << px(ox + 8.0)
            << "\" y=\"" << px(oy + 14.0 + 12.0 * static_cast<double>(si))
            << "\" font-family=\"monospace\" font-size=\"10\" fill=\""
            << kPalette[si % 6] << "\">" << series[si].label << "</text>\n";
      }
    }
  }
  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

void emit_plot(const std::vector<TrajectorySample>& samples,
               const std::vector<std::string>& quantities,
               const std::string& path) {
  emit_plot({{"run", &samples}}, quantities, {}, path);
}

}  // namespace pdflow
