// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctfsep/inverse_filter.hpp"
#include "ctfsep/scenario.hpp"
#include "ctfsep/sparse.hpp"

namespace ctfsep {

enum class Method { mint, mpdr, classo, lasso };

std::string to_string(Method method);
Method parse_method(const std::string& name);

/// Everything a separation run needs. Either `scenario` is synthesized, or a
/// mixture WAV and RIRs are read from disk.
struct RunConfig {
  Method method = Method::mint;
  Index frame_len = 1024;
  Index hop = 256;

  IfSolverConfig inverse;
  bool auto_rho = true;  // rho from auto_mint_ratio() when I <= J
  ClassoConfig classo;
  double lasso_lambda = 1.0;

  ScenarioSpec scenario;

  std::string mix_wav;                // empty: synthesize
  std::string rir_file;               // binary tensor
  std::vector<std::string> rir_wavs;  // one multichannel WAV per source
  std::string noise_psd;              // CSV path, "measure", or empty
  std::string noise_wav;              // for noise_psd = measure
  std::vector<std::string> source_wavs;  // references for metrics

  std::vector<Index> desired;  // empty: every source
  std::string output_dir;
  bool timing = false;  // include wall-clock runtime in reports
};

/// Ordered key/value pairs from a flat `key = value` text file.
using Settings = std::vector<std::pair<std::string, std::string>>;

Settings parse_settings(std::istream& in);
Settings load_settings(const std::string& path);

/// Parses "key=value"; throws FormatError when '=' is missing.
std::pair<std::string, std::string> split_setting(const std::string& text);

/// Applies one setting; throws ArgumentError on unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
void apply_settings(RunConfig& cfg, const Settings& settings);

/// Range and consistency checks; throws ArgumentError.
void validate(const RunConfig& cfg);

/// The effective configuration as sorted key/value pairs (for reports).
std::map<std::string, std::string> describe(const RunConfig& cfg);

/// Benchmark sweep: the cross product of the listed values, `repeats` seeds
/// each (seed, seed + 1, ...).
struct BenchSpec {
  RunConfig base;
  std::vector<Method> methods;
  std::vector<Index> mics;
  std::vector<Index> sources;
  std::vector<std::optional<double>> snr_db;
  std::vector<std::optional<double>> npm_db;
  int repeats = 1;
};

/// Reads `sweep.*` and `repeats` keys; every other key goes to `base`.
BenchSpec make_bench_spec(const Settings& settings);

}  // namespace ctfsep
