// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctfsep/config.hpp"
#include "ctfsep/signal.hpp"

namespace ctfsep {

inline constexpr const char* kReportSchema = "ctfsep.report/1";
inline constexpr const char* kBenchSchema = "ctfsep.bench/1";

struct SourceMetrics {
  Index source = 0;
  std::optional<double> sdr_db;
  std::optional<double> sir_db;
  std::optional<double> output_snr_db;
  std::optional<double> npm_db;  // of the filters handed to the solver
};

/// Result of one separation run. Absent values could not be computed from the
/// available inputs (for example, no reference signals in file mode).
struct MetricsReport {
  std::string method;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  Index mics = 0;
  Index sources = 0;
  std::optional<double> input_snr_db;
  std::vector<SourceMetrics> per_source;
  std::optional<double> mean_sdr_db;
  std::optional<double> mean_sir_db;
  std::optional<double> mean_output_snr_db;
  std::string sir_basis;         // "noise_free_output" or "output"
  std::string output_snr_basis;  // "filtered_tracks", "projection" or "unavailable"
  Index bins = 0;
  Index degenerate_bins = 0;
  Index infeasible_bins = 0;
  Index nonconverged_bins = 0;
  std::optional<double> runtime_s;
};

/// Pretty-printed JSON with a trailing newline.
std::string to_json(const MetricsReport& report);

struct RunOutput {
  MetricsReport report;
  std::vector<Index> desired;     // source index of each estimate channel
  MultichannelSignal estimates;   // one channel per desired source
};

/// Synthesizes or loads the scenario, converts the RIRs to CTFs, runs the
/// configured solver, resynthesizes the estimates and scores them.
RunOutput run_separation(const RunConfig& cfg);

/// Writes report.json and source_<j>.wav (float32) into `dir`, creating it.
void write_run(const RunOutput& run, const std::string& dir);

struct BenchRow {
  std::string method;
  Index mics = 0;
  Index sources = 0;
  std::optional<double> snr_db;
  std::optional<double> npm_db;
  int repeats = 0;
  std::optional<double> sdr_db;
  std::optional<double> sir_db;
  std::optional<double> output_snr_db;
  std::optional<double> input_snr_db;
  Index infeasible_bins = 0;
  std::optional<double> runtime_s;
};

struct BenchReport {
  std::map<std::string, std::string> base_config;
  std::uint64_t seed = 0;
  int repeats = 0;
  std::vector<BenchRow> rows;
};

/// Runs the cross product of the sweep axes; repeat r uses seed + r. Each row
/// holds the mean over repeats of the per-run means. Absent metrics are
/// averaged over the runs that have them.
BenchReport run_benchmark(const BenchSpec& spec);

std::string to_json(const BenchReport& bench);
std::string to_csv(const BenchReport& bench);

}  // namespace ctfsep
