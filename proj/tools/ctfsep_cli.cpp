// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// ctfsep: multichannel source separation and dereverberation in the STFT
// domain. Exit codes: 0 success, 2 configuration or input error, 3 numeric
// failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctfsep/config.hpp"
#include "ctfsep/io.hpp"
#include "ctfsep/metrics.hpp"
#include "ctfsep/pipeline.hpp"
#include "ctfsep/scenario.hpp"
#include "ctfsep/wav.hpp"

namespace fs = std::filesystem;
using namespace ctfsep;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::string method;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_method) {
  cmd->add_option("-c,--config", o.config_file, "key = value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "override one setting, key=value (repeatable)");
  if (with_method) {
    cmd->add_option("-m,--method", o.method, "mint, mpdr, classo or lasso");
  }
  cmd->add_option("--seed", o.seed, "scenario and solver seed");
}

// File settings first, then --set in order, then the dedicated flags.
Settings collect_settings(const CommonOptions& o) {
  Settings s;
  if (!o.config_file.empty()) s = load_settings(o.config_file);
  for (const auto& text : o.sets) s.push_back(split_setting(text));
  if (!o.method.empty()) s.emplace_back("method", o.method);
  if (o.seed) s.emplace_back("seed", std::to_string(*o.seed));
  return s;
}

RunConfig make_config(const CommonOptions& o) {
  RunConfig cfg;
  apply_settings(cfg, collect_settings(o));
  validate(cfg);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create " + dir + ": " + ec.message());
}

int cmd_separate(const CommonOptions& o) {
  RunConfig cfg = make_config(o);
  if (!o.out.empty()) cfg.output_dir = o.out;
  const RunOutput run = run_separation(cfg);
  if (!cfg.output_dir.empty()) write_run(run, cfg.output_dir);
  std::cout << to_json(run.report);
  return 0;
}

int cmd_simulate(const CommonOptions& o) {
  const RunConfig cfg = make_config(o);
  const std::string dir = o.out.empty() ? cfg.output_dir : o.out;
  require(!dir.empty(), "simulate needs --out");
  make_dir(dir);
  const fs::path base(dir);
  const Scenario sc = generate_scenario(cfg.scenario);
  save_wav(sc.mixture.mics, (base / "mics.wav").string());
  save_wav(sc.sources, (base / "sources.wav").string());
  save_wav(sc.mixture.noise, (base / "noise.wav").string());
  for (std::size_t j = 0; j < sc.mixture.images.size(); ++j) {
    save_wav(sc.mixture.images[j], (base / ("image_" + std::to_string(j) + ".wav")).string());
  }
  save_rir_tensor(sc.rirs, (base / "rirs.bin").string());
  save_rir_tensor(sc.known_rirs, (base / "rirs_known.bin").string());
  const WindowPair win = design_windows(cfg.frame_len, cfg.hop);
  save_noise_psd(measure_noise_psd(sc.mixture.noise, win), (base / "noise_psd.csv").string());

  nlohmann::ordered_json j;
  j["schema"] = "ctfsep.scenario/1";
  j["seed"] = cfg.scenario.seed;
  j["mics"] = sc.mixture.mics.channels();
  j["sources"] = sc.sources.channels();
  j["samples"] = sc.sources.length();
  j["sample_rate"] = sc.sources.sample_rate();
  if (cfg.scenario.snr_db) {
    j["input_snr_db"] = sc.mixture.input_snr_db;
  } else {
    j["input_snr_db"] = nullptr;
  }
  j["config"] = describe(cfg);
  const std::string text = j.dump(2) + "\n";
  write_text(base / "scenario.json", text);
  std::cout << text;
  return 0;
}

int cmd_evaluate(const std::string& estimate_path, const std::string& reference_path) {
  const MultichannelSignal est = load_wav(estimate_path);
  const MultichannelSignal ref = load_wav(reference_path);
  require(est.channels() <= ref.channels(),
          "the estimate has more channels than the reference has sources");
  const Index n = std::min(est.length(), ref.length());
  std::vector<VectorXd> refs;
  for (Index j = 0; j < ref.channels(); ++j) refs.push_back(ref.channel(j).head(n).transpose());

  nlohmann::ordered_json out;
  out["schema"] = "ctfsep.evaluate/1";
  out["samples"] = n;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Index d = 0; d < est.channels(); ++d) {
    const VectorXd y = est.channel(d).head(n).transpose();
    std::vector<VectorXd> interferers;
    for (Index j = 0; j < ref.channels(); ++j) {
      if (j != d) interferers.push_back(refs[j]);
    }
    rows.push_back({{"source", d}, {"sdr_db", sdr(y, refs[d])}, {"sir_db", sir(y, refs[d], interferers)}});
  }
  out["per_source"] = std::move(rows);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_bench(const CommonOptions& o) {
  const BenchSpec spec = make_bench_spec(collect_settings(o));
  const BenchReport bench = run_benchmark(spec);
  const std::string json = to_json(bench);
  const std::string dir = o.out.empty() ? spec.base.output_dir : o.out;
  if (!dir.empty()) {
    make_dir(dir);
    write_text(fs::path(dir) / "bench.json", json);
    write_text(fs::path(dir) / "bench.csv", to_csv(bench));
  }
  std::cout << json;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multichannel source separation with convolutive transfer functions"};
  app.require_subcommand(1);

  CommonOptions sep_opts, sim_opts, bench_opts;
  auto* sep = app.add_subcommand("separate", "run one separation and print its report");
  add_common(sep, sep_opts, true);
  sep->add_option("-o,--out", sep_opts.out, "directory for report.json and source WAVs");

  auto* sim = app.add_subcommand("simulate", "write a synthetic scenario to disk");
  add_common(sim, sim_opts, false);
  sim->add_option("-o,--out", sim_opts.out, "output directory")->required();

  std::string estimate, reference;
  auto* eval = app.add_subcommand("evaluate", "score estimates against references");
  eval->add_option("--estimate", estimate, "WAV, one channel per estimated source")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--reference", reference, "WAV, one channel per source")
      ->required()
      ->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "run a sweep and print the aggregated table");
  add_common(bench, bench_opts, true);
  bench->add_option("-o,--out", bench_opts.out, "directory for bench.json and bench.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sep) return cmd_separate(sep_opts);
    if (*sim) return cmd_simulate(sim_opts);
    if (*eval) return cmd_evaluate(estimate, reference);
    if (*bench) return cmd_bench(bench_opts);
  } catch (const NumericError& e) {
    std::cerr << "ctfsep: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "ctfsep: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "ctfsep: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
