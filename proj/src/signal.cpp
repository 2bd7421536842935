// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/signal.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace ctfsep {

MultichannelSignal::MultichannelSignal(MatrixXd samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  require(sample_rate_ > 0, "sample rate must be positive");
}

MultichannelSignal::MultichannelSignal(Index channels, Index length,
                                       int sample_rate)
    : MultichannelSignal(MatrixXd::Zero(channels, length), sample_rate) {}

WindowPair design_windows(Index frame_len, Index hop) {
  require(frame_len > 0 && frame_len % 2 == 0, "frame length must be even");
  require(hop > 0, "hop must be positive");
  require(4 * hop <= frame_len, "hop must not exceed frame_len / 4");

  WindowPair win;
  win.frame_len = frame_len;
  win.hop = hop;
  win.analysis.resize(frame_len);
  for (Index n = 0; n < frame_len; ++n) {
    win.analysis(n) = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                              static_cast<double>(n) /
                                              static_cast<double>(frame_len));
  }

  // sum over all shifts n + mD that land inside [0, N)
  win.synthesis.resize(frame_len);
  for (Index n = 0; n < frame_len; ++n) {
    double denom = 0.0;
    for (Index m = n % hop; m < frame_len; m += hop) {
      denom += win.analysis(m) * win.analysis(m);
    }
    if (!(denom > 0.0)) throw ArgumentError("dual window denominator is not positive");
    win.synthesis(n) = win.analysis(n) / denom;
  }
  return win;
}

Spectrogram::Spectrogram(Index channels, Index bins, Index frames,
                         Index frame_len, Index hop, Index signal_length,
                         int sample_rate)
    : data_(channels, MatrixXcd::Zero(bins, frames)),
      bins_(bins),
      frames_(frames),
      frame_len_(frame_len),
      hop_(hop),
      signal_length_(signal_length),
      sample_rate_(sample_rate) {}

MatrixXcd Spectrogram::bin(Index k) const {
  MatrixXcd out(frames_, channels());
  for (Index c = 0; c < channels(); ++c) out.col(c) = data_[c].row(k).transpose();
  return out;
}

void Spectrogram::set_bin(Index k, const MatrixXcd& frames_by_channels) {
  require(frames_by_channels.cols() == channels(), "set_bin: channel mismatch");
  const Index n = std::min(frames_, frames_by_channels.rows());
  for (Index c = 0; c < channels(); ++c) {
    data_[c].row(k).setZero();
    data_[c].row(k).head(n) = frames_by_channels.col(c).head(n).transpose();
  }
}

double Spectrogram::squared_norm() const {
  double total = 0.0;
  for (const auto& m : data_) total += m.squaredNorm();
  return total;
}

Spectrogram Spectrogram::like(Index channels, Index frames) const {
  return Spectrogram(channels, bins_, frames, frame_len_, hop_, signal_length_,
                     sample_rate_);
}

Index frame_count(Index n_samples, Index frame_len, Index hop) {
  return (n_samples + frame_len + hop - 1) / hop;
}

Spectrogram stft(const MultichannelSignal& signal, const WindowPair& win) {
  require(signal.length() > 0 && signal.channels() > 0, "stft: empty signal");
  const Index n_fft = win.frame_len;
  const Index frames = frame_count(signal.length(), n_fft, win.hop);
  Spectrogram spec(signal.channels(), win.bins(), frames, n_fft, win.hop,
                   signal.length(), signal.sample_rate());

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(n_fft);
  std::vector<cdouble> bins;
  for (Index c = 0; c < signal.channels(); ++c) {
    const auto x = signal.channel(c);
    for (Index p = 0; p < frames; ++p) {
      const Index start = p * win.hop - n_fft;
      for (Index m = 0; m < n_fft; ++m) {
        const Index t = start + m;
        frame[m] = (t >= 0 && t < signal.length()) ? x(t) * win.analysis(m) : 0.0;
      }
      fft.fwd(bins, frame);
      for (Index k = 0; k < win.bins(); ++k) spec(c, k, p) = bins[k];
    }
  }
  return spec;
}

MultichannelSignal istft(const Spectrogram& spec, const WindowPair& win) {
  require(spec.frame_len() == win.frame_len && spec.hop() == win.hop &&
              spec.bins() == win.bins(),
          "istft: spectrogram metadata does not match the window pair");
  const Index n_fft = win.frame_len;
  MultichannelSignal out(spec.channels(), spec.signal_length(), spec.sample_rate());

  Eigen::FFT<double> fft;
  std::vector<cdouble> full(n_fft);
  std::vector<cdouble> frame;
  for (Index c = 0; c < spec.channels(); ++c) {
    auto y = out.channel(c);
    for (Index p = 0; p < spec.frames(); ++p) {
      const Index start = p * win.hop - n_fft;
      if (start >= spec.signal_length() || start + n_fft <= 0) continue;
      // conjugate-symmetric extension; DC and Nyquist taken as real
      full[0] = spec(c, 0, p).real();
      full[n_fft / 2] = spec(c, n_fft / 2, p).real();
      for (Index k = 1; k < n_fft / 2; ++k) {
        full[k] = spec(c, k, p);
        full[n_fft - k] = std::conj(full[k]);
      }
      fft.inv(frame, full);
      for (Index m = 0; m < n_fft; ++m) {
        const Index t = start + m;
        if (t >= 0 && t < spec.signal_length()) y(t) += win.synthesis(m) * frame[m].real();
      }
    }
  }
  return out;
}

}  // namespace ctfsep
