#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdflow/config.hpp"
#include "pdflow/metrics.hpp"

namespace pdflow {

enum class SystemKind { Main, Chbani, HeOde };

std::string to_string(SystemKind kind);
SystemKind system_from_string(const std::string& name);

// A complete description of one run: problem source, flow, parameters,
// initial data, horizon, sampling, integrator settings, output location.
struct ExperimentSpec {
  std::string instance_ref = "reference";  // built-in name or instance file path
  SystemKind system = SystemKind::Main;
  ParameterSet params;
  double rho = 1.0;                        // heode penalty
  std::optional<double> kappa;             // heode dual extrapolation; defaults to q
  Vector x0;
  Vector v0;
  Vector lambda0;
  Vector lambda_dot0;                      // heode only
  double t_end = 1e4;
  int samples = 400;
  IntegratorConfig integrator;             // sample_grid is derived, not configured
  double fit_t_lo = 0.0;                   // 0 = t_end / 100
  double fit_t_hi = 0.0;                   // 0 = t_end
  std::string out_dir = "runs";
  int workers = 1;
  unsigned seed = 12345;

  double resolved_kappa() const { return kappa ? *kappa : params.q; }
};

ExperimentSpec default_spec();

// Canonical document form; decode rejects unknown keys and validates hard
// parameter bounds. The run id hashes the canonical dump minus execution
// details (out, workers, seed).
config::Document spec_to_document(const ExperimentSpec& spec);
ExperimentSpec decode_spec(const config::Document& doc);
std::string run_id(const ExperimentSpec& spec);

ProblemInstance resolve_instance(const ExperimentSpec& spec);

struct QuantityVerdict {
  std::string quantity;
  std::optional<RateEstimate> fit;     // absent when the fit failed
  std::optional<double> predicted;
  std::string verdict;                 // pass | fail | informational
  std::string note;
};

struct RunResult {
  std::string id;
  std::string dir;
  std::string csv_path;
  std::string rates_path;
  std::vector<std::string> plot_paths;
  std::vector<TrajectorySample> samples;
  std::vector<QuantityVerdict> verdicts;
  RegimeClassification regime;
  IntegratorStats stats;
  bool pass = true;  // no quantity verdict failed
};

// Integrates, extracts metrics, fits rates and writes
// <out>/<run-id>/{trajectory.csv, rates.txt, plot_*.svg, manifest.txt}.
// Integrator/solver errors are recorded in the report and rethrown.
RunResult run_experiment(const ExperimentSpec& spec);

struct SweepCell {
  double value = 0.0;
  std::optional<RunResult> result;
  std::string error;  // set when the cell failed
};

struct SweepResult {
  std::string axis;
  std::vector<SweepCell> cells;  // ascending axis value
  std::string summary_path;
  std::string summary_text;
  std::string plot_path;  // combined error panels, one curve per cell
};

// One run per axis value; cells execute concurrently bounded by
// spec.workers; per-cell errors are recorded without aborting the sweep.
SweepResult run_sweep(const ExperimentSpec& base, const std::string& axis,
                      const std::vector<double>& values);

struct PlotSeries {
  std::string label;
  const std::vector<TrajectorySample>* samples = nullptr;
};

// Self-contained deterministic SVG: one log-log panel per quantity, one
// polyline per series, dashed reference slopes for predicted exponents.
// Throws NothingToPlot when nothing has two positive points.
void emit_plot(const std::vector<PlotSeries>& series,
               const std::vector<std::string>& quantities,
               const RatePrediction& guides, const std::string& path);
void emit_plot(const std::vector<TrajectorySample>& samples,
               const std::vector<std::string>& quantities,
               const std::string& path);

}  // namespace pdflow
