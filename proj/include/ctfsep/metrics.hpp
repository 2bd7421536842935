// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "ctfsep/types.hpp"

namespace ctfsep {

/// Magnitude cap of SDR, SIR and SNR values, in dB.
inline constexpr double kMetricCapDb = 60.0;
/// Lower bound reported by npm() for a perfect (or purely scaled) estimate.
inline constexpr double kNpmFloorDb = -120.0;
/// Length of the allowed distortion filter used by sdr() and sir().
inline constexpr Index kDistortionTaps = 32;

double clamp_db(double db, double cap = kMetricCapDb);

/// 10 log10(num / den), clamped to [-cap, cap]; 0/0 gives -cap.
double ratio_db(double num, double den, double cap = kMetricCapDb);

/// Normalized projection misalignment:
///   20 log10(||a - (<a, b> / ||b||^2) b|| / ||a||),
/// floored at kNpmFloorDb. `a` is the true filter, `b` the estimate.
template <typename DerivedA, typename DerivedB>
double npm(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  require(a.size() == b.size() && a.size() > 0, "npm: size mismatch");
  const double a_norm = a.norm();
  require(a_norm > 0.0, "npm: reference filter is zero");
  const double b_norm2 = b.squaredNorm();
  if (b_norm2 == 0.0) return 0.0;
  const auto proj = b.dot(a) / b_norm2;  // b^H a
  const double mis = (a - proj * b).norm();
  if (mis == 0.0) return kNpmFloorDb;
  return std::max(kNpmFloorDb, 20.0 * std::log10(mis / a_norm));
}

/// n x taps matrix whose column l is `x` delayed by l samples.
MatrixXd delayed_columns(const VectorXd& x, Index taps);

/// Least-squares projection of `estimate` onto the span of the references,
/// each filtered by an FIR of `taps` causal taps. Returns the projected
/// component of every reference (column j).
MatrixXd project_filtered(const VectorXd& estimate, const std::vector<VectorXd>& references,
                          Index taps = kDistortionTaps);

/// Signal-to-distortion ratio after a `taps`-tap allowed distortion filter.
double sdr(const VectorXd& estimate, const VectorXd& reference, Index taps = kDistortionTaps);

/// Signal-to-interference ratio from a joint projection onto the desired and
/// the interfering references.
double sir(const VectorXd& estimate, const VectorXd& desired,
           const std::vector<VectorXd>& interferers, Index taps = kDistortionTaps);

/// Power ratio of two tracks, in dB.
double output_snr(const VectorXd& signal_part, const VectorXd& noise_part);

/// Output SNR when the output cannot be split linearly: the component
/// explained by the filtered dry sources is signal, the rest is noise.
double output_snr_projection(const VectorXd& estimate, const std::vector<VectorXd>& sources,
                             Index taps = kDistortionTaps);

}  // namespace ctfsep
