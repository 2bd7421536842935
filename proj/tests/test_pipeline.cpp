// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ctfsep/io.hpp"
#include "ctfsep/pipeline.hpp"
#include "ctfsep/scenario.hpp"
#include "ctfsep/wav.hpp"

using namespace ctfsep;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.frame_len = 256;
  cfg.hop = 64;
  cfg.scenario.mics = 4;
  cfg.scenario.sources = 2;
  cfg.scenario.sample_rate = 8000;
  cfg.scenario.duration_s = 0.5;
  cfg.scenario.rir_len = 400;
  cfg.scenario.rir_decay_s = 0.15;
  return cfg;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ctfsep_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("mint run writes estimates and a report") {
  const RunConfig cfg = small_config();
  const RunOutput run = run_separation(cfg);
  CHECK(run.desired == std::vector<Index>{0, 1});
  CHECK(run.estimates.channels() == 2);
  CHECK(run.estimates.length() == 4000);
  REQUIRE(run.report.per_source.size() == 2);
  CHECK(run.report.mean_sdr_db.has_value());
  CHECK(*run.report.mean_sdr_db > 10.0);
  CHECK(run.report.sir_basis == "output");
  CHECK(run.report.output_snr_basis == "noise_free_input");
  CHECK_FALSE(run.report.runtime_s.has_value());

  const fs::path dir = scratch_dir("mint");
  write_run(run, dir.string());
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "source_0.wav"));
  CHECK(fs::exists(dir / "source_1.wav"));
  const auto j = nlohmann::json::parse(read_file(dir / "report.json"));
  CHECK(j["schema"] == kReportSchema);
  CHECK(j["method"] == "mint");
  CHECK(j["per_source"].size() == 2);
  const MultichannelSignal back = load_wav((dir / "source_1.wav").string());
  CHECK(back.length() == 4000);
  CHECK(back.sample_rate() == 8000);
}

TEST_CASE("noisy mint reports filtered-track metrics") {
  RunConfig cfg = small_config();
  cfg.scenario.snr_db = 10.0;
  cfg.inverse.delta = 1e-3;
  const RunOutput run = run_separation(cfg);
  CHECK(run.report.sir_basis == "noise_free_output");
  CHECK(run.report.output_snr_basis == "filtered_tracks");
  REQUIRE(run.report.input_snr_db.has_value());
  CHECK(std::abs(*run.report.input_snr_db - 10.0) < 0.1);
  CHECK(run.report.mean_output_snr_db.has_value());
}

TEST_CASE("desired subset") {
  RunConfig cfg = small_config();
  cfg.desired = {1};
  const RunOutput run = run_separation(cfg);
  CHECK(run.estimates.channels() == 1);
  REQUIRE(run.report.per_source.size() == 1);
  CHECK(run.report.per_source[0].source == 1);
  cfg.desired = {2};
  CHECK_THROWS_AS(run_separation(cfg), ArgumentError);
}

TEST_CASE("invalid method") {
  RunConfig cfg = small_config();
  CHECK_THROWS_AS(apply_setting(cfg, "method", "pca"), ArgumentError);
  cfg.hop = 100;
  CHECK_THROWS_AS(run_separation(cfg), ArgumentError);
}

TEST_CASE("runs are deterministic") {
  RunConfig cfg = small_config();
  cfg.method = Method::classo;
  cfg.scenario.duration_s = 0.25;
  cfg.scenario.snr_db = 20.0;
  const std::string a = to_json(run_separation(cfg).report);
  const std::string b = to_json(run_separation(cfg).report);
  CHECK(a == b);
  CHECK(a.find("\"projection\"") != std::string::npos);
}

TEST_CASE("timing is opt-in") {
  RunConfig cfg = small_config();
  cfg.timing = true;
  const RunOutput run = run_separation(cfg);
  REQUIRE(run.report.runtime_s.has_value());
  CHECK(*run.report.runtime_s > 0.0);
  CHECK(to_json(run.report).find("runtime_s") != std::string::npos);
}

TEST_CASE("single-condition bench equals the single run") {
  BenchSpec spec;
  spec.base = small_config();
  const BenchReport bench = run_benchmark(spec);
  REQUIRE(bench.rows.size() == 1);
  const RunOutput run = run_separation(spec.base);
  CHECK(bench.rows[0].sdr_db == run.report.mean_sdr_db);
  CHECK(bench.rows[0].sir_db == run.report.mean_sir_db);
  CHECK(bench.rows[0].method == "mint");
}

TEST_CASE("bench averages repeats") {
  BenchSpec spec;
  spec.base = small_config();
  spec.base.scenario.duration_s = 0.25;
  spec.repeats = 3;
  const BenchReport bench = run_benchmark(spec);
  REQUIRE(bench.rows.size() == 1);
  double sum = 0.0;
  for (std::uint64_t r = 0; r < 3; ++r) {
    RunConfig cfg = spec.base;
    cfg.scenario.seed = spec.base.scenario.seed + r;
    sum += *run_separation(cfg).report.mean_sdr_db;
  }
  CHECK(*bench.rows[0].sdr_db == doctest::Approx(sum / 3.0).epsilon(1e-12));
}

TEST_CASE("bench sweep and serialization") {
  BenchSpec spec;
  spec.base = small_config();
  spec.base.scenario.duration_s = 0.25;
  spec.mics = {2, 3, 4};
  const BenchReport bench = run_benchmark(spec);
  REQUIRE(bench.rows.size() == 3);
  CHECK(bench.rows[0].mics == 2);
  CHECK(bench.rows[2].mics == 4);
  const auto j = nlohmann::json::parse(to_json(bench));
  CHECK(j["schema"] == kBenchSchema);
  CHECK(j["rows"].size() == 3);
  const std::string csv = to_csv(bench);
  CHECK(csv.rfind("method,mics,sources,snr_db,npm_db,repeats,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(to_json(bench) == to_json(run_benchmark(spec)));
}

TEST_CASE("file mode matches synthesized inputs") {
  RunConfig cfg = small_config();
  cfg.scenario.snr_db = 20.0;
  const Scenario sc = generate_scenario(cfg.scenario);
  const fs::path dir = scratch_dir("files");
  save_wav(sc.mixture.mics, (dir / "mics.wav").string());
  save_wav(sc.mixture.noise, (dir / "noise.wav").string());
  save_wav(sc.sources, (dir / "sources.wav").string());
  save_rir_tensor(sc.known_rirs, (dir / "rirs.bin").string());

  RunConfig files = cfg;
  files.mix_wav = (dir / "mics.wav").string();
  files.rir_file = (dir / "rirs.bin").string();
  files.noise_wav = (dir / "noise.wav").string();
  files.source_wavs = {(dir / "sources.wav").string()};
  const RunOutput from_files = run_separation(files);
  const RunOutput synth = run_separation(cfg);
  REQUIRE(from_files.report.mean_sdr_db.has_value());
  // Float32 storage perturbs the inputs slightly.
  CHECK(std::abs(*from_files.report.mean_sdr_db - *synth.report.mean_sdr_db) < 0.5);
  CHECK(from_files.report.output_snr_basis == "filtered_tracks");

  files.source_wavs.clear();
  const RunOutput blind = run_separation(files);
  CHECK_FALSE(blind.report.mean_sdr_db.has_value());
  CHECK(to_json(blind.report).find("\"sdr_db\": null") != std::string::npos);

  files.rir_file = (dir / "missing.bin").string();
  CHECK_THROWS_AS(run_separation(files), FormatError);
}

}
