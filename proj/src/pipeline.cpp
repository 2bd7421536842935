// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "ctfsep/ctf.hpp"
#include "ctfsep/inverse_filter.hpp"
#include "ctfsep/io.hpp"
#include "ctfsep/metrics.hpp"
#include "ctfsep/scenario.hpp"
#include "ctfsep/sparse.hpp"
#include "ctfsep/wav.hpp"

namespace ctfsep {

namespace {

using Json = nlohmann::ordered_json;

Json opt(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

// Everything the solvers and the scoring need, whatever the input mode.
struct Problem {
  MultichannelSignal mics;
  RirTensor known;
  bool noisy = true;
  std::optional<MultichannelSignal> noise_free;
  std::optional<MultichannelSignal> noise;
  std::optional<MultichannelSignal> references;  // dry sources
  std::optional<MatrixXd> noise_psd;
  std::optional<double> input_snr_db;
  std::vector<std::optional<double>> npm_db;
};

Problem synthesize(const RunConfig& cfg) {
  Scenario sc = generate_scenario(cfg.scenario);
  Problem p;
  p.mics = std::move(sc.mixture.mics);
  p.known = std::move(sc.known_rirs);
  p.noisy = cfg.scenario.snr_db.has_value();
  p.noise_free = std::move(sc.mixture.noise_free);
  p.noise = std::move(sc.mixture.noise);
  p.references = std::move(sc.sources);
  if (p.noisy) p.input_snr_db = sc.mixture.input_snr_db;
  p.npm_db.resize(p.known.sources());
  if (cfg.scenario.npm_db) {
    for (Index j = 0; j < p.known.sources(); ++j) {
      p.npm_db[j] = npm(sc.rirs.source_filters(j), p.known.source_filters(j));
    }
  }
  return p;
}

MultichannelSignal fit_length(const MultichannelSignal& s, Index length) {
  MatrixXd out = MatrixXd::Zero(s.channels(), length);
  const Index n = std::min(length, s.length());
  out.leftCols(n) = s.samples().leftCols(n);
  return MultichannelSignal(std::move(out), s.sample_rate());
}

Problem load_inputs(const RunConfig& cfg, const WindowPair& win) {
  Problem p;
  p.mics = load_wav(cfg.mix_wav);
  p.known = cfg.rir_file.empty() ? load_rir_wavs(cfg.rir_wavs) : load_rir_tensor(cfg.rir_file);
  require(p.known.mics() == p.mics.channels(),
          "the RIRs have " + std::to_string(p.known.mics()) + " mics, the mixture has " +
              std::to_string(p.mics.channels()) + " channels");
  p.npm_db.resize(p.known.sources());

  if (!cfg.noise_wav.empty()) {
    MultichannelSignal noise = load_wav(cfg.noise_wav);
    require(noise.channels() == p.mics.channels(), "noise_wav channel count differs from the mixture");
    noise = fit_length(noise, p.mics.length());
    p.noise_free = MultichannelSignal(p.mics.samples() - noise.samples(), p.mics.sample_rate());
    p.input_snr_db = ratio_db(p.noise_free->samples().squaredNorm(), noise.samples().squaredNorm());
    p.noise = std::move(noise);
  }

  if (cfg.noise_psd == "measure") {
    p.noise_psd = measure_noise_psd(*p.noise, win);
  } else if (!cfg.noise_psd.empty()) {
    p.noise_psd = load_noise_psd(cfg.noise_psd);
    if (p.noise_psd->rows() != win.bins() || p.noise_psd->cols() != p.mics.channels()) {
      throw FormatError("noise PSD must be " + std::to_string(win.bins()) + " x " +
                        std::to_string(p.mics.channels()) + " (bins x mics)");
    }
  }

  if (!cfg.source_wavs.empty()) {
    MatrixXd refs(0, p.mics.length());
    for (const auto& path : cfg.source_wavs) {
      const MultichannelSignal s = fit_length(load_wav(path), p.mics.length());
      MatrixXd grown(refs.rows() + s.channels(), refs.cols());
      grown << refs, s.samples();
      refs = std::move(grown);
    }
    require(refs.rows() == p.known.sources(),
            "source_wavs hold " + std::to_string(refs.rows()) + " channels for " +
                std::to_string(p.known.sources()) + " sources");
    p.references = MultichannelSignal(std::move(refs), p.mics.sample_rate());
  }
  return p;
}

VectorXd as_vector(const MultichannelSignal& s, Index c) { return s.channel(c).transpose(); }

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  int count = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

template <typename Row>
std::optional<double> mean_of(const std::vector<Row>& rows, std::optional<double> Row::*field) {
  std::vector<std::optional<double>> values;
  for (const auto& r : rows) values.push_back(r.*field);
  return mean_of(values);
}

std::string fmt_csv(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

}  // namespace

RunOutput run_separation(const RunConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const WindowPair win = design_windows(cfg.frame_len, cfg.hop);
  const Problem prob = cfg.mix_wav.empty() ? synthesize(cfg) : load_inputs(cfg, win);

  const Index mics = prob.known.mics();
  const Index sources = prob.known.sources();
  std::vector<Index> desired = cfg.desired;
  if (desired.empty()) {
    for (Index j = 0; j < sources; ++j) desired.push_back(j);
  }
  for (Index j : desired) {
    require(j < sources, "desired source " + std::to_string(j) + " does not exist");
  }

  const CtfTensor ctf = rir_to_ctf(prob.known, win);
  const Spectrogram x = stft(prob.mics, win);
  const Index n = prob.mics.length();
  const int fs = prob.mics.sample_rate();

  RunOutput out;
  out.desired = desired;
  out.estimates = MultichannelSignal(static_cast<Index>(desired.size()), n, fs);
  MetricsReport& rep = out.report;
  rep.method = to_string(cfg.method);
  rep.config = describe(cfg);
  rep.seed = cfg.scenario.seed;
  rep.mics = mics;
  rep.sources = sources;
  rep.input_snr_db = prob.input_snr_db;
  rep.bins = x.bins();

  const bool linear = cfg.method == Method::mint || cfg.method == Method::mpdr;
  const bool split_tracks = linear && prob.noisy && prob.noise_free && prob.noise;
  std::vector<MultichannelSignal> noise_free_out(desired.size());
  std::vector<MultichannelSignal> noise_out(desired.size());

  if (linear) {
    IfSolverConfig ic = cfg.inverse;
    if (cfg.auto_rho) ic.rho = auto_mint_ratio(mics, sources);
    std::optional<Spectrogram> x_clean, x_noise;
    if (split_tracks) {
      x_clean = stft(*prob.noise_free, win);
      x_noise = stft(*prob.noise, win);
    }
    std::vector<InverseFilterSet> mint_sets;
    if (cfg.method == Method::mint) mint_sets = design_mint(ctf, desired, ic, win);
    for (std::size_t d = 0; d < desired.size(); ++d) {
      const InverseFilterSet filters = cfg.method == Method::mint
                                           ? std::move(mint_sets[d])
                                           : design_mpdr(ctf, x, desired[d], ic, win);
      rep.degenerate_bins += static_cast<Index>(filters.degenerate_bins.size());
      out.estimates.channel(static_cast<Index>(d)) =
          istft(recover_source(filters, x), win).channel(0);
      if (split_tracks) {
        noise_free_out[d] = istft(recover_source(filters, *x_clean), win);
        noise_out[d] = istft(recover_source(filters, *x_noise), win);
      }
    }
  } else {
    SparseResult result;
    if (cfg.method == Method::classo) {
      const MatrixXd psd =
          prob.noise_psd ? *prob.noise_psd
                         : (prob.noisy && prob.noise ? measure_noise_psd(*prob.noise, win)
                                                     : MatrixXd::Zero(x.bins(), x.channels()));
      const ToleranceModel tol = compute_tolerance(psd, x);
      result = solve_classo(ctf, x, tol, cfg.classo);
    } else {
      LassoConfig lc;
      lc.seed = cfg.classo.seed;
      result = solve_lasso_fista(ctf, x, cfg.lasso_lambda, lc);
    }
    for (const auto& b : result.bins) {
      rep.infeasible_bins += b.feasible ? 0 : 1;
      rep.nonconverged_bins += b.converged ? 0 : 1;
    }
    const MultichannelSignal all = istft(result.sources, win);
    for (std::size_t d = 0; d < desired.size(); ++d) {
      out.estimates.channel(static_cast<Index>(d)) = all.channel(desired[d]);
    }
  }

  rep.sir_basis = split_tracks ? "noise_free_output" : "output";
  if (split_tracks) {
    rep.output_snr_basis = "filtered_tracks";
  } else if (!linear && prob.noisy && prob.references) {
    rep.output_snr_basis = "projection";
  } else {
    rep.output_snr_basis = prob.noisy ? "unavailable" : "noise_free_input";
  }

  for (std::size_t d = 0; d < desired.size(); ++d) {
    const Index j = desired[d];
    SourceMetrics m;
    m.source = j;
    m.npm_db = prob.npm_db[j];
    const VectorXd y = as_vector(out.estimates, static_cast<Index>(d));
    if (prob.references) {
      const VectorXd s = as_vector(*prob.references, j);
      std::vector<VectorXd> interferers, all;
      for (Index m2 = 0; m2 < sources; ++m2) {
        all.push_back(as_vector(*prob.references, m2));
        if (m2 != j) interferers.push_back(all.back());
      }
      m.sdr_db = sdr(y, s);
      m.sir_db = split_tracks ? sir(as_vector(noise_free_out[d], 0), s, interferers)
                              : sir(y, s, interferers);
      if (rep.output_snr_basis == "projection") m.output_snr_db = output_snr_projection(y, all);
    }
    if (split_tracks) {
      m.output_snr_db = output_snr(as_vector(noise_free_out[d], 0), as_vector(noise_out[d], 0));
    }
    rep.per_source.push_back(m);
  }
  rep.mean_sdr_db = mean_of(rep.per_source, &SourceMetrics::sdr_db);
  rep.mean_sir_db = mean_of(rep.per_source, &SourceMetrics::sir_db);
  rep.mean_output_snr_db = mean_of(rep.per_source, &SourceMetrics::output_snr_db);

  if (cfg.timing) {
    rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

std::string to_json(const MetricsReport& r) {
  Json j;
  j["schema"] = kReportSchema;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["mics"] = r.mics;
  j["sources"] = r.sources;
  j["input_snr_db"] = opt(r.input_snr_db);
  j["mean_sdr_db"] = opt(r.mean_sdr_db);
  j["mean_sir_db"] = opt(r.mean_sir_db);
  j["mean_output_snr_db"] = opt(r.mean_output_snr_db);
  j["sir_basis"] = r.sir_basis;
  j["output_snr_basis"] = r.output_snr_basis;
  Json per = Json::array();
  for (const auto& s : r.per_source) {
    Json e;
    e["source"] = s.source;
    e["sdr_db"] = opt(s.sdr_db);
    e["sir_db"] = opt(s.sir_db);
    e["output_snr_db"] = opt(s.output_snr_db);
    e["npm_db"] = opt(s.npm_db);
    per.push_back(std::move(e));
  }
  j["per_source"] = std::move(per);
  j["convergence"] = {{"bins", r.bins},
                      {"degenerate_bins", r.degenerate_bins},
                      {"infeasible_bins", r.infeasible_bins},
                      {"nonconverged_bins", r.nonconverged_bins}};
  j["metric_caps_db"] = {{"sdr_sir_snr", kMetricCapDb}, {"npm_floor", kNpmFloorDb}};
  j["pesq"] = "not computed";
  if (r.runtime_s) j["runtime_s"] = *r.runtime_s;
  j["config"] = r.config;
  return j.dump(2) + "\n";
}

void write_run(const RunOutput& run, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "report.json", std::ios::binary);
    if (!out) throw FormatError("cannot write " + (base / "report.json").string());
    out << to_json(run.report);
  }
  for (std::size_t d = 0; d < run.desired.size(); ++d) {
    MatrixXd one = run.estimates.channel(static_cast<Index>(d));
    save_wav(MultichannelSignal(std::move(one), run.estimates.sample_rate()),
             (base / ("source_" + std::to_string(run.desired[d]) + ".wav")).string());
  }
}

BenchReport run_benchmark(const BenchSpec& spec) {
  require(spec.base.mix_wav.empty(), "bench runs on synthesized scenarios only");
  require(spec.repeats >= 1, "repeats must be at least 1");
  const RunConfig& base = spec.base;
  auto or_base = [](const auto& axis, auto fallback) {
    using T = std::decay_t<decltype(axis.front())>;
    return axis.empty() ? std::vector<T>{static_cast<T>(fallback)} : axis;
  };
  const auto methods = or_base(spec.methods, base.method);
  const auto mic_axis = or_base(spec.mics, base.scenario.mics);
  const auto source_axis = or_base(spec.sources, base.scenario.sources);
  const auto snr_axis = or_base(spec.snr_db, base.scenario.snr_db);
  const auto npm_axis = or_base(spec.npm_db, base.scenario.npm_db);

  BenchReport bench;
  bench.base_config = describe(base);
  bench.seed = base.scenario.seed;
  bench.repeats = spec.repeats;
  for (Method method : methods) {
    for (Index mics : mic_axis) {
      for (Index sources : source_axis) {
        for (const auto& snr : snr_axis) {
          for (const auto& npm_db : npm_axis) {
            BenchRow row;
            row.method = to_string(method);
            row.mics = mics;
            row.sources = sources;
            row.snr_db = snr;
            row.npm_db = npm_db;
            row.repeats = spec.repeats;
            std::vector<MetricsReport> runs;
            double runtime = 0.0;
            for (int r = 0; r < spec.repeats; ++r) {
              RunConfig cfg = base;
              cfg.method = method;
              cfg.scenario.mics = mics;
              cfg.scenario.sources = sources;
              cfg.scenario.snr_db = snr;
              cfg.scenario.npm_db = npm_db;
              cfg.scenario.seed = base.scenario.seed + static_cast<std::uint64_t>(r);
              cfg.classo.seed = cfg.scenario.seed;
              runs.push_back(run_separation(cfg).report);
              row.infeasible_bins += runs.back().infeasible_bins;
              runtime += runs.back().runtime_s.value_or(0.0);
            }
            row.sdr_db = mean_of(runs, &MetricsReport::mean_sdr_db);
            row.sir_db = mean_of(runs, &MetricsReport::mean_sir_db);
            row.output_snr_db = mean_of(runs, &MetricsReport::mean_output_snr_db);
            row.input_snr_db = mean_of(runs, &MetricsReport::input_snr_db);
            if (base.timing) row.runtime_s = runtime / spec.repeats;
            bench.rows.push_back(row);
          }
        }
      }
    }
  }
  return bench;
}

std::string to_json(const BenchReport& b) {
  Json j;
  j["schema"] = kBenchSchema;
  j["seed"] = b.seed;
  j["repeats"] = b.repeats;
  Json rows = Json::array();
  for (const auto& r : b.rows) {
    Json e;
    e["method"] = r.method;
    e["mics"] = r.mics;
    e["sources"] = r.sources;
    e["snr_db"] = opt(r.snr_db);
    e["npm_db"] = opt(r.npm_db);
    e["repeats"] = r.repeats;
    e["sdr_db"] = opt(r.sdr_db);
    e["sir_db"] = opt(r.sir_db);
    e["output_snr_db"] = opt(r.output_snr_db);
    e["input_snr_db"] = opt(r.input_snr_db);
    e["infeasible_bins"] = r.infeasible_bins;
    if (r.runtime_s) e["runtime_s"] = *r.runtime_s;
    rows.push_back(std::move(e));
  }
  j["rows"] = std::move(rows);
  j["config"] = b.base_config;
  return j.dump(2) + "\n";
}

std::string to_csv(const BenchReport& b) {
  const bool timing = std::any_of(b.rows.begin(), b.rows.end(),
                                  [](const BenchRow& r) { return r.runtime_s.has_value(); });
  std::ostringstream out;
  out << "method,mics,sources,snr_db,npm_db,repeats,sdr_db,sir_db,output_snr_db,input_snr_db,"
         "infeasible_bins";
  if (timing) out << ",runtime_s";
  out << '\n';
  for (const auto& r : b.rows) {
    out << r.method << ',' << r.mics << ',' << r.sources << ',' << fmt_csv(r.snr_db) << ','
        << fmt_csv(r.npm_db) << ',' << r.repeats << ',' << fmt_csv(r.sdr_db) << ','
        << fmt_csv(r.sir_db) << ',' << fmt_csv(r.output_snr_db) << ','
        << fmt_csv(r.input_snr_db) << ',' << r.infeasible_bins;
    if (timing) out << ',' << fmt_csv(r.runtime_s);
    out << '\n';
  }
  return out.str();
}

}  // namespace ctfsep
