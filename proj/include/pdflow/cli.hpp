#pragma once

namespace pdflow {

// Command-line entry point; returns the process exit code.
// 0 = success (all verdicts pass or are informational),
// 1 = a verdict or verification check failed,
// 2 = configuration or runtime error.
// stdout carries data and tables; stderr carries diagnostics.
int run_cli(int argc, const char* const* argv);

}  // namespace pdflow
