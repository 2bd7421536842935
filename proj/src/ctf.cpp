// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/ctf.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace ctfsep {

namespace {

// sum_m w~(m) w(n + m) for n in [-(N-1), N-1], element n + N - 1.
VectorXd window_correlation(const WindowPair& win) {
  const Index n_fft = win.frame_len;
  VectorXd corr = VectorXd::Zero(2 * n_fft - 1);
  for (Index n = -(n_fft - 1); n < n_fft; ++n) {
    const Index m_lo = std::max<Index>(0, -n);
    const Index m_hi = std::min<Index>(n_fft, n_fft - n);
    double acc = 0.0;
    for (Index m = m_lo; m < m_hi; ++m) acc += win.analysis(m) * win.synthesis(n + m);
    corr(n + n_fft - 1) = acc;
  }
  return corr;
}

cdouble unit_phase(double cycles) {
  const double angle = 2.0 * std::numbers::pi * cycles;
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace

cdouble ZetaKernel::at(Index n) const {
  if (n <= -frame_len || n >= frame_len) return 0.0;
  return dense(n + frame_len - 1);
}

ZetaKernel zeta_kernel(const WindowPair& win, Index k) {
  require(k >= 0 && k <= win.frame_len / 2, "zeta_kernel: bin index out of range");
  const Index n_fft = win.frame_len;
  const VectorXd corr = window_correlation(win);

  ZetaKernel z;
  z.bin = k;
  z.frame_len = n_fft;
  z.hop = win.hop;
  z.dense.resize(corr.size());
  for (Index n = -(n_fft - 1); n < n_fft; ++n) {
    // reduce k n mod N before forming the phase to keep it exact
    const Index kn = (k * n) % n_fft;
    z.dense(n + n_fft - 1) =
        unit_phase(static_cast<double>(kn) / static_cast<double>(n_fft)) *
        corr(n + n_fft - 1);
  }
  const Index shift = win.causal_shift();
  z.taps.resize(2 * shift + 1);
  for (Index p = -shift; p <= shift; ++p) z.taps(p + shift) = z.at(p * win.hop);
  return z;
}

RirTensor::RirTensor(Index mics, Index sources, Index length)
    : mics_(mics), sources_(sources), length_(length),
      data_(MatrixXd::Zero(mics * sources, length)) {
  require(mics >= 1 && sources >= 1 && length >= 1, "RirTensor: empty dimension");
}

VectorXd RirTensor::source_filters(Index j) const {
  VectorXd out(mics_ * length_);
  for (Index i = 0; i < mics_; ++i) out.segment(i * length_, length_) = filter(i, j).transpose();
  return out;
}

void RirTensor::set_source_filters(Index j, const VectorXd& concatenated) {
  require(concatenated.size() == mics_ * length_, "set_source_filters: size mismatch");
  for (Index i = 0; i < mics_; ++i) filter(i, j) = concatenated.segment(i * length_, length_).transpose();
}

BinCtf::BinCtf(Index mics, Index sources, Index taps)
    : mics_(mics), sources_(sources), taps_(taps),
      coeffs_(MatrixXcd::Zero(mics * sources, taps)) {
  require(mics >= 1 && sources >= 1 && taps >= 1, "BinCtf: empty dimension");
}

CtfTensor::CtfTensor(Index mics, Index sources, Index bins, Index taps, Index causal_shift)
    : mics_(mics), sources_(sources), taps_(taps), causal_shift_(causal_shift),
      bins_(bins, BinCtf(mics, sources, taps)) {
  require(causal_shift >= 0 && causal_shift < taps, "CtfTensor: bad causal shift");
}

CtfTensor CtfTensor::select_sources(const std::vector<Index>& keep) const {
  CtfTensor out(mics_, static_cast<Index>(keep.size()), bins(), taps_, causal_shift_);
  for (Index k = 0; k < bins(); ++k) {
    for (std::size_t n = 0; n < keep.size(); ++n) {
      require(keep[n] >= 0 && keep[n] < sources_, "select_sources: index out of range");
      for (Index i = 0; i < mics_; ++i) {
        out.bin(k).filter(i, static_cast<Index>(n)) = bins_[k].filter(i, keep[n]);
      }
    }
  }
  return out;
}

Index ctf_length(Index rir_length, Index frame_len, Index hop) {
  require(rir_length >= 1, "ctf_length: empty RIR");
  return (rir_length + frame_len - 1 + hop - 1) / hop + (frame_len + hop - 1) / hop - 1;
}

CtfTensor rir_to_ctf(const RirTensor& rirs, const WindowPair& win) {
  const Index n_fft = win.frame_len;
  const Index hop = win.hop;
  const Index shift = win.causal_shift();
  const Index taps = ctf_length(rirs.length(), n_fft, hop);
  const Index bins = win.bins();
  const VectorXd corr = window_correlation(win);

  CtfTensor ctf(rirs.mics(), rirs.sources(), bins, taps, shift);

  // For a fixed lag q, (a * zeta_k)(qD) = e^{j2pi k qD/N} sum_l a(l) c(qD - l)
  // e^{-j2pi k l/N}; the l-sum is an N-point DFT of the folded sequence.
  Eigen::FFT<double> fft;
  std::vector<cdouble> folded(n_fft), spectrum;
  for (Index j = 0; j < rirs.sources(); ++j) {
    for (Index i = 0; i < rirs.mics(); ++i) {
      const auto a = rirs.filter(i, j);
      for (Index c = 0; c < taps; ++c) {
        const Index lag = (c - shift) * hop;
        std::fill(folded.begin(), folded.end(), cdouble(0.0));
        const Index l_lo = std::max<Index>(0, lag - n_fft + 1);
        const Index l_hi = std::min<Index>(rirs.length(), lag + n_fft);
        for (Index l = l_lo; l < l_hi; ++l) {
          const Index bucket = ((l % n_fft) + n_fft) % n_fft;
          folded[bucket] += a(l) * corr(lag - l + n_fft - 1);
        }
        fft.fwd(spectrum, folded);
        for (Index k = 0; k < bins; ++k) {
          const Index phase = ((k * lag) % n_fft + n_fft) % n_fft;
          ctf.bin(k)(i, j, c) = unit_phase(static_cast<double>(phase) / static_cast<double>(n_fft)) *
                                spectrum[k] / static_cast<double>(n_fft);
        }
      }
    }
  }
  return ctf;
}

CtfTensor impulse_ctf(const WindowPair& win) {
  RirTensor delta(1, 1, 1);
  delta.filter(0, 0)(0) = 1.0;
  return rir_to_ctf(delta, win);
}

MatrixXcd ctf_convolve(const BinCtf& ctf, const MatrixXcd& sources) {
  require(sources.cols() == ctf.sources(), "ctf_convolve: source count mismatch");
  require(sources.rows() >= 1, "ctf_convolve: no frames");
  const Index frames = sources.rows();
  const Index mics = ctf.mics(), srcs = ctf.sources(), taps = ctf.taps();
  // Shifted copies of the sources side by side, times the stacked taps.
  MatrixXcd shifted = MatrixXcd::Zero(frames + taps - 1, taps * srcs);
  MatrixXcd weights(taps * srcs, mics);
  for (Index c = 0; c < taps; ++c) {
    shifted.block(c, c * srcs, frames, srcs) = sources;
    for (Index j = 0; j < srcs; ++j) {
      for (Index i = 0; i < mics; ++i) weights(c * srcs + j, i) = ctf(i, j, c);
    }
  }
  return shifted * weights;
}

MatrixXcd ctf_adjoint(const BinCtf& ctf, const MatrixXcd& residual) {
  require(residual.cols() == ctf.mics(), "ctf_adjoint: mic count mismatch");
  require(residual.rows() >= ctf.taps(), "ctf_adjoint: residual shorter than the filters");
  const Index mics = ctf.mics(), srcs = ctf.sources(), taps = ctf.taps();
  const Index frames = residual.rows() - taps + 1;
  MatrixXcd shifted(frames, taps * mics);
  MatrixXcd weights(taps * mics, srcs);
  for (Index c = 0; c < taps; ++c) {
    shifted.middleCols(c * mics, mics) = residual.middleRows(c, frames);
    for (Index i = 0; i < mics; ++i) {
      for (Index j = 0; j < srcs; ++j) weights(c * mics + i, j) = std::conj(ctf(i, j, c));
    }
  }
  return shifted * weights;
}

Spectrogram ctf_convolve(const CtfTensor& ctf, const Spectrogram& sources) {
  require(sources.channels() == ctf.sources(), "ctf_convolve: source count mismatch");
  require(sources.bins() == ctf.bins(), "ctf_convolve: bin count mismatch");
  Spectrogram out = sources.like(ctf.mics(), sources.frames() + ctf.taps() - 1);
  for (Index k = 0; k < ctf.bins(); ++k) out.set_bin(k, ctf_convolve(ctf.bin(k), sources.bin(k)));
  return out;
}

Spectrogram ctf_adjoint(const CtfTensor& ctf, const Spectrogram& residual) {
  require(residual.channels() == ctf.mics(), "ctf_adjoint: mic count mismatch");
  require(residual.bins() == ctf.bins(), "ctf_adjoint: bin count mismatch");
  Spectrogram out = residual.like(ctf.sources(), residual.frames() - ctf.taps() + 1);
  for (Index k = 0; k < ctf.bins(); ++k) out.set_bin(k, ctf_adjoint(ctf.bin(k), residual.bin(k)));
  return out;
}

Spectrogram align_to_stft(const Spectrogram& full, Index causal_shift, Index frames) {
  Spectrogram out = full.like(full.channels(), frames);
  for (Index c = 0; c < full.channels(); ++c) {
    const Index n = std::max<Index>(0, std::min(frames, full.frames() - causal_shift));
    if (n > 0) out.channel(c).leftCols(n) = full.channel(c).middleCols(causal_shift, n);
  }
  return out;
}

double ctf_energy(const BinCtf& ctf, Index j) {
  require(j >= 0 && j < ctf.sources(), "ctf_energy: source index out of range");
  double total = 0.0;
  for (Index i = 0; i < ctf.mics(); ++i) total += ctf.filter(i, j).squaredNorm();
  return total;
}

double ctf_energy(const CtfTensor& ctf, Index j, Index k) { return ctf_energy(ctf.bin(k), j); }

}  // namespace ctfsep
