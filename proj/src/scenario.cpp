// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/scenario.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/FFT>

#include "ctfsep/metrics.hpp"

namespace ctfsep {

namespace {

constexpr std::uint64_t kRirStream = 1;
constexpr std::uint64_t kSourceStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kPerturbStream = 4;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

VectorXd gaussian(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> normal;
  VectorXd g(n);
  for (Index i = 0; i < n; ++i) g(i) = normal(rng);
  return g;
}

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

void add_syllable(VectorXd& s, Index start, Index len, double f0, std::mt19937_64& rng,
                  double fs) {
  const double glide = uniform(rng, -0.2, 0.2);
  const double f1 = uniform(rng, 300.0, 900.0);
  const double f2 = uniform(rng, 900.0, 2500.0);
  const double gain = uniform(rng, 0.5, 1.0);
  const double top = std::min(4000.0, 0.45 * fs);
  const int harmonics = std::max(1, static_cast<int>(top / (f0 * 1.2)));
  std::normal_distribution<double> normal;

  for (int h = 1; h <= harmonics; ++h) {
    const double fh = h * f0;
    const double shape = 1.0 + 4.0 * std::exp(-std::pow((fh - f1) / 150.0, 2)) +
                         3.0 * std::exp(-std::pow((fh - f2) / 250.0, 2));
    const double amp = shape / h;
    double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (Index t = 0; t < len; ++t) {
      const double frac = static_cast<double>(t) / static_cast<double>(len);
      const double env = std::pow(std::sin(std::numbers::pi * frac), 2);
      s(start + t) += gain * amp * env * std::sin(phase);
      phase += 2.0 * std::numbers::pi * fh * (1.0 + glide * frac) / fs;
    }
  }
  for (Index t = 0; t < len; ++t) {
    const double frac = static_cast<double>(t) / static_cast<double>(len);
    s(start + t) += 0.05 * gain * std::pow(std::sin(std::numbers::pi * frac), 2) * normal(rng);
  }
}

}  // namespace

void validate(const ScenarioSpec& spec) {
  require(spec.mics >= 1 && spec.sources >= 1, "scenario: need at least one mic and source");
  require(spec.sample_rate > 0, "scenario: sample_rate must be positive");
  require(spec.duration_s > 0.0, "scenario: duration must be positive");
  require(spec.rir_len >= 1, "scenario: rir_len must be at least 1");
  require(spec.rir_decay_s >= 0.0, "scenario: rir_decay_s must be non-negative");
  require(spec.tail_gain >= 0.0, "scenario: tail_gain must be non-negative");
  require(spec.max_direct_delay_s >= 0.0, "scenario: max_direct_delay_s must be non-negative");
  if (spec.npm_db) require(*spec.npm_db < 0.0, "scenario: npm_db must be negative");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + stream * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RirTensor synth_rir(const ScenarioSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(derive_seed(spec.seed, kRirStream));
  const double fs = spec.sample_rate;
  const Index max_delay = std::min<Index>(spec.rir_len - 1,
                                          static_cast<Index>(std::floor(spec.max_direct_delay_s * fs)));
  RirTensor rirs(spec.mics, spec.sources, spec.rir_len);
  for (Index j = 0; j < spec.sources; ++j) {
    for (Index i = 0; i < spec.mics; ++i) {
      const Index delay = std::uniform_int_distribution<Index>(0, max_delay)(rng);
      VectorXd a = VectorXd::Zero(spec.rir_len);
      a(delay) = 1.0;
      const VectorXd g = gaussian(rng, spec.rir_len);
      if (spec.rir_decay_s > 0.0 && spec.tail_gain > 0.0) {
        const double rate = 3.0 * std::log(10.0) / (fs * spec.rir_decay_s);
        for (Index n = delay + 1; n < spec.rir_len; ++n) {
          a(n) += spec.tail_gain * g(n) * std::exp(-rate * static_cast<double>(n - delay));
        }
      }
      rirs.filter(i, j) = (a / a.norm()).transpose();
    }
  }
  return rirs;
}

MultichannelSignal synth_sources(const ScenarioSpec& spec) {
  validate(spec);
  const double fs = spec.sample_rate;
  const Index n = std::max<Index>(1, static_cast<Index>(std::llround(spec.duration_s * fs)));
  MultichannelSignal out(spec.sources, n, spec.sample_rate);
  for (Index j = 0; j < spec.sources; ++j) {
    std::mt19937_64 rng(derive_seed(spec.seed, kSourceStream + 16 * (static_cast<std::uint64_t>(j) + 1)));
    VectorXd s = VectorXd::Zero(n);
    const double f0_base = uniform(rng, 100.0, 220.0);
    auto pos = static_cast<Index>(uniform(rng, 0.05, 0.15) * fs);
    while (pos < n) {
      const Index len = std::min<Index>(n - pos, static_cast<Index>(uniform(rng, 0.08, 0.25) * fs));
      if (len >= 8) add_syllable(s, pos, len, f0_base * uniform(rng, 0.85, 1.15), rng, fs);
      const bool long_pause = uniform(rng, 0.0, 1.0) < 0.2;
      const double gap = long_pause ? uniform(rng, 0.3, 0.6) : uniform(rng, 0.03, 0.2);
      pos += len + static_cast<Index>(gap * fs);
    }
    const double rms = std::sqrt(s.squaredNorm() / static_cast<double>(n));
    if (rms > 0.0) s *= 0.1 / rms;
    out.channel(j) = s.transpose();
  }
  return out;
}

VectorXd convolve_truncated(const VectorXd& x, const VectorXd& h) {
  const Index n = x.size();
  if (n == 0 || h.size() == 0) return VectorXd::Zero(n);
  const Index m = std::min(h.size(), n);
  if (m <= 64) {
    VectorXd y = VectorXd::Zero(n);
    for (Index l = 0; l < m; ++l) y.tail(n - l) += h(l) * x.head(n - l);
    return y;
  }
  const Index nfft = next_pow2(n + m - 1);
  Eigen::FFT<double> fft;
  std::vector<double> xa(nfft, 0.0), ha(nfft, 0.0), ya;
  for (Index i = 0; i < n; ++i) xa[i] = x(i);
  for (Index i = 0; i < m; ++i) ha[i] = h(i);
  std::vector<cdouble> xf, hf;
  fft.fwd(xf, xa);
  fft.fwd(hf, ha);
  for (std::size_t k = 0; k < xf.size(); ++k) xf[k] *= hf[k];
  fft.inv(ya, xf);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) y(i) = ya[i];
  return y;
}

Mixture mix(const MultichannelSignal& sources, const RirTensor& rirs,
            std::optional<double> snr_db, std::uint64_t seed) {
  require(sources.channels() == rirs.sources(), "mix: source count differs from the RIRs");
  const Index n = sources.length();
  const int fs = sources.sample_rate();
  Mixture out;
  out.noise_free = MultichannelSignal(rirs.mics(), n, fs);
  for (Index j = 0; j < rirs.sources(); ++j) {
    MultichannelSignal image(rirs.mics(), n, fs);
    const VectorXd s = sources.channel(j).transpose();
    for (Index i = 0; i < rirs.mics(); ++i) {
      image.channel(i) = convolve_truncated(s, rirs.filter(i, j).transpose()).transpose();
    }
    out.noise_free.samples() += image.samples();
    out.images.push_back(std::move(image));
  }

  out.noise = MultichannelSignal(rirs.mics(), n, fs);
  if (snr_db) {
    std::mt19937_64 rng(seed);
    MatrixXd g(rirs.mics(), n);
    std::normal_distribution<double> normal;
    for (Index i = 0; i < rirs.mics(); ++i) {
      for (Index t = 0; t < n; ++t) g(i, t) = normal(rng);
    }
    double mean_image_db = 0.0;
    for (const auto& image : out.images) {
      const double energy = image.samples().squaredNorm();
      require(energy > 0.0, "mix: a source image is silent; SNR is undefined");
      mean_image_db += 10.0 * std::log10(energy);
    }
    mean_image_db /= static_cast<double>(out.images.size());
    const double noise_energy = std::pow(10.0, (mean_image_db - *snr_db) / 10.0);
    out.noise.samples() = g * std::sqrt(noise_energy / g.squaredNorm());
  }

  out.mics = MultichannelSignal(out.noise_free.samples() + out.noise.samples(), fs);
  const double noise_energy = out.noise.samples().squaredNorm();
  double total_db = 0.0;
  for (const auto& image : out.images) {
    const double snr = ratio_db(image.samples().squaredNorm(), noise_energy, 300.0);
    out.source_snr_db.push_back(snr);
    total_db += snr;
  }
  out.input_snr_db = total_db / static_cast<double>(out.images.size());
  return out;
}

RirTensor perturb_rirs(const RirTensor& rirs, double npm_db, std::uint64_t seed) {
  require(npm_db < 0.0, "perturb_rirs: npm_db must be negative");
  std::mt19937_64 rng(seed);
  RirTensor out = rirs;
  for (Index j = 0; j < rirs.sources(); ++j) {
    const VectorXd a = rirs.source_filters(j);
    const VectorXd g = gaussian(rng, a.size());
    const VectorXd g_perp = g - (a.dot(g) / a.squaredNorm()) * a;
    require(g_perp.norm() > 0.0, "perturb_rirs: degenerate perturbation direction");
    const double reachable = npm(a, g);
    require(npm_db < reachable, "perturb_rirs: requested NPM is not reachable");

    auto npm_at = [&](double c) { return npm(a, VectorXd(a + c * g)); };
    // NPM grows monotonically with c; bracket in the log domain around the
    // small-perturbation estimate and bisect.
    const double guess = std::pow(10.0, npm_db / 20.0) * a.norm() / g_perp.norm();
    double lo = guess, hi = guess;
    while (npm_at(lo) > npm_db) lo *= 0.5;
    while (npm_at(hi) < npm_db) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      const double value = npm_at(mid);
      if (std::abs(value - npm_db) < 1e-6) {
        lo = hi = mid;
        break;
      }
      (value < npm_db ? lo : hi) = mid;
    }
    out.set_source_filters(j, a + std::sqrt(lo * hi) * g);
  }
  return out;
}

MatrixXd measure_noise_psd(const MultichannelSignal& noise, const WindowPair& win) {
  const Spectrogram spec = stft(noise, win);
  const Index n = noise.length();
  // frame p spans samples [pD - N, pD)
  const Index first = (win.frame_len + win.hop - 1) / win.hop;
  const Index last = n / win.hop;
  MatrixXd psd = MatrixXd::Zero(spec.bins(), spec.channels());
  if (last < first) {
    for (Index c = 0; c < spec.channels(); ++c) {
      psd.col(c) = spec.channel(c).cwiseAbs2().rowwise().mean();
    }
    return psd;
  }
  const Index count = last - first + 1;
  for (Index c = 0; c < spec.channels(); ++c) {
    psd.col(c) = spec.channel(c).middleCols(first, count).cwiseAbs2().rowwise().mean();
  }
  return psd;
}

Scenario generate_scenario(const ScenarioSpec& spec) {
  validate(spec);
  Scenario sc;
  sc.spec = spec;
  sc.rirs = synth_rir(spec);
  sc.known_rirs = spec.npm_db ? perturb_rirs(sc.rirs, *spec.npm_db, derive_seed(spec.seed, kPerturbStream))
                              : sc.rirs;
  sc.sources = synth_sources(spec);
  sc.mixture = mix(sc.sources, sc.rirs, spec.snr_db, derive_seed(spec.seed, kNoiseStream));
  return sc;
}

}  // namespace ctfsep
