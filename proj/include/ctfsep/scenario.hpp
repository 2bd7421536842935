// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ctfsep/ctf.hpp"
#include "ctfsep/signal.hpp"
#include "ctfsep/types.hpp"

namespace ctfsep {

/// Parameters of a synthetic experiment.
struct ScenarioSpec {
  Index mics = 4;
  Index sources = 2;
  int sample_rate = 16000;
  double duration_s = 2.0;
  Index rir_len = 3200;
  double rir_decay_s = 0.3;        // reverberation time of the RIR tail envelope
  double tail_gain = 0.1;          // tail amplitude relative to the direct path
  double max_direct_delay_s = 0.005;
  std::optional<double> snr_db;    // absent: noise-free
  std::optional<double> npm_db;    // absent: the solver gets the true RIRs
  std::uint64_t seed = 1;
};

void validate(const ScenarioSpec& spec);

/// Independent stream seed for a named generation stage.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Unit direct-path impulse at a random delay plus an exponentially decaying
/// Gaussian tail, normalized to unit l2 norm.
RirTensor synth_rir(const ScenarioSpec& spec);

/// Speech-like sources: syllable bursts of harmonic complexes with a breathy
/// noise part, separated by silences. One channel per source.
MultichannelSignal synth_sources(const ScenarioSpec& spec);

/// Linear convolution truncated to the length of `x`.
VectorXd convolve_truncated(const VectorXd& x, const VectorXd& h);

struct Mixture {
  MultichannelSignal mics;                 // images + noise
  std::vector<MultichannelSignal> images;  // per source, one channel per mic
  MultichannelSignal noise;
  MultichannelSignal noise_free;           // sum of images
  std::vector<double> source_snr_db;       // per-source image-to-noise ratio
  double input_snr_db = 0.0;               // dB mean of source_snr_db
};

/// x^i = sum_j a^{i,j} * s^j + e^i, truncated to the source length. White
/// Gaussian noise is scaled so the dB mean of the per-source image-to-noise
/// ratios equals `snr_db`.
Mixture mix(const MultichannelSignal& sources, const RirTensor& rirs,
            std::optional<double> snr_db, std::uint64_t seed);

/// a~ = a + c g per source with c found by bisection so that the NPM of the
/// concatenated filters equals `npm_db`.
RirTensor perturb_rirs(const RirTensor& rirs, double npm_db, std::uint64_t seed);

/// Periodogram average of |E_{p,k}|^2 over the frames lying entirely inside
/// the noise track; bins x channels.
MatrixXd measure_noise_psd(const MultichannelSignal& noise, const WindowPair& win);

struct Scenario {
  ScenarioSpec spec;
  RirTensor rirs;        // true filters
  RirTensor known_rirs;  // filters given to the solvers
  MultichannelSignal sources;
  Mixture mixture;
};

Scenario generate_scenario(const ScenarioSpec& spec);

}  // namespace ctfsep
