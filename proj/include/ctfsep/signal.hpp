// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "ctfsep/types.hpp"

namespace ctfsep {

/// Time-domain samples, one row per channel.
class MultichannelSignal {
 public:
  MultichannelSignal() = default;
  MultichannelSignal(MatrixXd samples, int sample_rate);
  MultichannelSignal(Index channels, Index length, int sample_rate);

  Index channels() const { return samples_.rows(); }
  Index length() const { return samples_.cols(); }
  int sample_rate() const { return sample_rate_; }

  const MatrixXd& samples() const { return samples_; }
  MatrixXd& samples() { return samples_; }

  auto channel(Index c) const { return samples_.row(c); }
  auto channel(Index c) { return samples_.row(c); }

 private:
  MatrixXd samples_;
  int sample_rate_ = 16000;
};

/// Analysis / synthesis window pair of a perfect-reconstruction STFT.
struct WindowPair {
  VectorXd analysis;
  VectorXd synthesis;
  Index frame_len = 0;
  Index hop = 0;

  /// Number of frequency bins of the one-sided spectrum.
  Index bins() const { return frame_len / 2 + 1; }
  /// ceil(N / D) - 1: the number of non-causal taps of band-to-band filters.
  Index causal_shift() const { return (frame_len + hop - 1) / hop - 1; }
};

/// Periodic Hamming analysis window and its canonical dual.
///
/// The synthesis window is w(n) = w~(n) / sum_m w~(n + mD)^2, so that the
/// weighted overlap-add sum_p w~(n - pD) w(n - pD) equals one for every n.
/// Requires an even frame length and hop <= frame_len / 4.
WindowPair design_windows(Index frame_len, Index hop);

/// One-sided complex STFT of a multichannel signal.
///
/// Storage is one (bins x frames) matrix per channel. The signal is padded by
/// frame_len zeros at both ends; frame p starts at sample p*hop - frame_len
/// of the unpadded signal and the phase reference is the frame start.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(Index channels, Index bins, Index frames, Index frame_len,
              Index hop, Index signal_length, int sample_rate);

  Index channels() const { return static_cast<Index>(data_.size()); }
  Index bins() const { return bins_; }
  Index frames() const { return frames_; }
  Index frame_len() const { return frame_len_; }
  Index hop() const { return hop_; }
  Index signal_length() const { return signal_length_; }
  int sample_rate() const { return sample_rate_; }
  void set_signal_length(Index n) { signal_length_ = n; }

  const MatrixXcd& channel(Index c) const { return data_[c]; }
  MatrixXcd& channel(Index c) { return data_[c]; }

  cdouble operator()(Index c, Index k, Index p) const { return data_[c](k, p); }
  cdouble& operator()(Index c, Index k, Index p) { return data_[c](k, p); }

  /// Frames x channels view of one frequency bin (copy).
  MatrixXcd bin(Index k) const;
  /// Writes a frames x channels block into bin k; extra frames are dropped,
  /// missing frames are zero.
  void set_bin(Index k, const MatrixXcd& frames_by_channels);

  double squared_norm() const;

  /// Same metadata, different channel/frame count, zero-filled.
  Spectrogram like(Index channels, Index frames) const;

 private:
  std::vector<MatrixXcd> data_;
  Index bins_ = 0;
  Index frames_ = 0;
  Index frame_len_ = 0;
  Index hop_ = 0;
  Index signal_length_ = 0;
  int sample_rate_ = 16000;
};

/// P = ceil((n_samples + N) / D); every padded sample is covered by all of
/// the frames that overlap it.
Index frame_count(Index n_samples, Index frame_len, Index hop);

Spectrogram stft(const MultichannelSignal& signal, const WindowPair& win);

/// Weighted overlap-add with the synthesis window; output has
/// spec.signal_length() samples.
MultichannelSignal istft(const Spectrogram& spec, const WindowPair& win);

}  // namespace ctfsep
