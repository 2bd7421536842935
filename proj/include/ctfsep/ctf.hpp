// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "ctfsep/signal.hpp"
#include "ctfsep/types.hpp"

namespace ctfsep {

/// Modulated cross-correlation of the analysis and synthesis windows at one
/// frequency bin: zeta_k(n) = exp(j 2 pi k n / N) sum_m w~(m) w(n + m).
struct ZetaKernel {
  Index bin = 0;
  Index frame_len = 0;
  Index hop = 0;
  /// zeta_k(n) for n in [-(N-1), N-1]; element n + N - 1.
  VectorXcd dense;
  /// zeta_k(pD) for p in [-S, S] with S = ceil(N/D) - 1; element p + S.
  VectorXcd taps;

  Index causal_shift() const { return (taps.size() - 1) / 2; }
  cdouble at(Index n) const;
  /// The taps scaled by 1/N. This is the band-to-band filter of a unit
  /// impulse for the STFT pair in signal.hpp (the DFT pair contributes the
  /// 1/N factor that the window correlation alone does not carry).
  VectorXcd normalized_taps() const { return taps / static_cast<double>(frame_len); }
};

ZetaKernel zeta_kernel(const WindowPair& win, Index k);

/// Time-domain room impulse responses, mics x sources x length.
class RirTensor {
 public:
  RirTensor() = default;
  RirTensor(Index mics, Index sources, Index length);

  Index mics() const { return mics_; }
  Index sources() const { return sources_; }
  Index length() const { return length_; }

  auto filter(Index i, Index j) { return data_.row(i + mics_ * j); }
  auto filter(Index i, Index j) const { return data_.row(i + mics_ * j); }

  /// All microphones' filters of source j concatenated (mic-major).
  VectorXd source_filters(Index j) const;
  void set_source_filters(Index j, const VectorXd& concatenated);

 private:
  Index mics_ = 0, sources_ = 0, length_ = 0;
  MatrixXd data_;
};

/// Band-to-band filters of one frequency bin: mics x sources x taps.
class BinCtf {
 public:
  BinCtf() = default;
  BinCtf(Index mics, Index sources, Index taps);

  Index mics() const { return mics_; }
  Index sources() const { return sources_; }
  Index taps() const { return taps_; }

  cdouble operator()(Index i, Index j, Index p) const { return coeffs_(i + mics_ * j, p); }
  cdouble& operator()(Index i, Index j, Index p) { return coeffs_(i + mics_ * j, p); }

  auto filter(Index i, Index j) const { return coeffs_.row(i + mics_ * j); }
  auto filter(Index i, Index j) { return coeffs_.row(i + mics_ * j); }

  const MatrixXcd& coeffs() const { return coeffs_; }
  MatrixXcd& coeffs() { return coeffs_; }

 private:
  Index mics_ = 0, sources_ = 0, taps_ = 0;
  MatrixXcd coeffs_;  // row i + mics * j
};

/// Full-band CTF: one BinCtf per frequency bin.
///
/// causal_shift() is the number of non-causal taps that were moved into the
/// causal part; STFT frame p of a microphone corresponds to frame
/// p + causal_shift() of the full convolution output.
class CtfTensor {
 public:
  CtfTensor() = default;
  CtfTensor(Index mics, Index sources, Index bins, Index taps, Index causal_shift = 0);

  Index mics() const { return mics_; }
  Index sources() const { return sources_; }
  Index bins() const { return static_cast<Index>(bins_.size()); }
  Index taps() const { return taps_; }
  Index causal_shift() const { return causal_shift_; }

  const BinCtf& bin(Index k) const { return bins_[k]; }
  BinCtf& bin(Index k) { return bins_[k]; }

  /// Keeps only sources listed in `keep`, in that order.
  CtfTensor select_sources(const std::vector<Index>& keep) const;

 private:
  Index mics_ = 0, sources_ = 0, taps_ = 0, causal_shift_ = 0;
  std::vector<BinCtf> bins_;
};

/// L_a = ceil((L_rir + N - 1) / D) + ceil(N / D) - 1.
Index ctf_length(Index rir_length, Index frame_len, Index hop);

/// a_{p,k} = (a * zeta_k)(pD) / N for every p with non-zero support, the
/// ceil(N/D) - 1 non-causal taps shifted into the causal part.
CtfTensor rir_to_ctf(const RirTensor& rirs, const WindowPair& win);

/// Frame-axis convolution of one bin. `sources` is frames x J; the result is
/// (frames + L_a - 1) x I (full convolution).
MatrixXcd ctf_convolve(const BinCtf& ctf, const MatrixXcd& sources);

/// Adjoint of ctf_convolve: conjugated, time-reversed filters with source and
/// mic roles exchanged. `residual` is Q x I; the result is (Q - L_a + 1) x J.
MatrixXcd ctf_adjoint(const BinCtf& ctf, const MatrixXcd& residual);

/// Per-bin ctf_convolve over a whole spectrogram (full-length output).
Spectrogram ctf_convolve(const CtfTensor& ctf, const Spectrogram& sources);
Spectrogram ctf_adjoint(const CtfTensor& ctf, const Spectrogram& residual);

/// CTF of a unit impulse: for every bin, the sampled zeta taps divided by N.
CtfTensor impulse_ctf(const WindowPair& win);

/// Drops the causal_shift leading frames of a full convolution output and
/// keeps `frames` frames, mapping it onto the STFT frame grid of the mics.
Spectrogram align_to_stft(const Spectrogram& full, Index causal_shift, Index frames);

/// phi = sum_{i,p} |a_p^{i,j}|^2.
double ctf_energy(const BinCtf& ctf, Index j);
double ctf_energy(const CtfTensor& ctf, Index j, Index k);

}  // namespace ctfsep
