// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "ctfsep/ctf.hpp"
#include "ctfsep/types.hpp"

namespace ctfsep {

enum class FilterMethod { mint, mpdr };

std::string to_string(FilterMethod method);

/// Inverse filter length for a given column/row ratio of the CTF system.
///
/// mint: ceil((L_a - 1) / (I / (ratio J) - 1)); mpdr uses J = 1. The result is
/// at least 1. Throws ArgumentError when the ratio makes the length infinite
/// (ratio >= I/J for mint, ratio >= I for mpdr).
Index filter_length(FilterMethod method, Index mics, Index sources, Index ctf_taps,
                    double ratio);

/// Default MINT ratio: 1 when I > J (square system), otherwise a ratio that
/// keeps the inverse filter about 4.5 (L_a - 1) taps long.
double auto_mint_ratio(Index mics, Index sources);

/// Toeplitz matrix whose column c is `seq` shifted down by c, so that
/// convolution_matrix(a, L) * h == a * h (full convolution).
template <typename Derived>
Matrix<typename Derived::Scalar> convolution_matrix(const Eigen::MatrixBase<Derived>& seq,
                                                    Index filter_len) {
  using Scalar = typename Derived::Scalar;
  require(filter_len >= 1, "convolution_matrix: filter length must be positive");
  const Index n = seq.size();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(n + filter_len - 1, filter_len);
  for (Index c = 0; c < filter_len; ++c) {
    for (Index r = 0; r < n; ++r) out(r + c, c) = seq(r);
  }
  return out;
}

/// Inverse filtering target: `delay` zeros, the sampled zeta taps, zeros.
struct TargetSignal {
  VectorXcd d;
  Index delay = 0;
  VectorXcd zeta_taps;
};

TargetSignal build_target(Index ctf_taps, Index filter_len, Index delay,
                          const VectorXcd& zeta_taps);

/// Inverse filter of one frequency bin: column i holds h^i (L_h taps).
struct BinFilter {
  MatrixXcd h;
  double residual = 0.0;  // ||A h - g||^2 (mint) or ||A^{j_d} h - d||^2 (mpdr)
  bool degenerate = false;
};

/// Stacked MINT system A (J blocks of rows, I blocks of columns) and the
/// right-hand side g holding the target at block `desired`.
void build_mint_system(const BinCtf& ctf, Index desired, const TargetSignal& target,
                       MatrixXcd& a, VectorXcd& g);

/// Regularized multisource MINT:
///   h = (A^H A + delta phi I)^{-1} A^H g,  phi = energy of the desired CTFs.
/// delta == 0 returns the minimum-norm least-squares solution. A bin whose
/// desired CTF energy is zero yields h = 0 with `degenerate` set.
BinFilter solve_mint(const BinCtf& ctf, Index desired, double delta,
                     const TargetSignal& target);

/// Beamforming-like inverse filter using the desired source's CTFs only:
///   h = (A^H A + kappa phi_a / phi_x X^H X)^{-1} A^H d,
/// where X stacks the microphones' convolution matrices. `mics` is
/// frames x I for this bin.
BinFilter solve_mpdr(const BinCtf& ctf, Index desired, const MatrixXcd& mics,
                     double kappa, const TargetSignal& target);

struct IfSolverConfig {
  double rho = 1.0;     // mint columns / rows
  double varrho = 1.0;  // mpdr columns / rows
  double delta = 1e-5;
  double kappa = 1e-1;
  Index delay_mint = 6;
  Index delay_mpdr = 3;
};

/// Inverse filters of every bin for one desired source.
struct InverseFilterSet {
  FilterMethod method = FilterMethod::mint;
  Index desired = 0;
  double regularization = 0.0;
  Index delay = 0;
  Index filter_len = 0;
  std::vector<MatrixXcd> h;  // per bin, L_h x I
  std::vector<double> residuals;
  std::vector<Index> degenerate_bins;

  Index bins() const { return static_cast<Index>(h.size()); }
  Index mics() const { return h.empty() ? 0 : h.front().cols(); }
};

InverseFilterSet design_mint(const CtfTensor& ctf, Index desired, const IfSolverConfig& cfg,
                             const WindowPair& win);

/// Filters for several desired sources; each bin's system is built once.
std::vector<InverseFilterSet> design_mint(const CtfTensor& ctf, const std::vector<Index>& desired,
                                          const IfSolverConfig& cfg, const WindowPair& win);

InverseFilterSet design_mpdr(const CtfTensor& ctf, const Spectrogram& mics, Index desired,
                             const IfSolverConfig& cfg, const WindowPair& win);

/// y_p = sum_i h_p^i * x_p^i per bin; output has P + L_h - 1 frames.
Spectrogram apply_inverse_filter(const InverseFilterSet& filters, const Spectrogram& mics);

/// Advances a spectrogram by `advance` frames and keeps `frames` frames.
Spectrogram compensate_delay(const Spectrogram& y, Index advance, Index frames);

/// apply_inverse_filter followed by removal of the modeling delay, on the
/// frame grid of `mics`. Mic spectrograms are on the STFT grid already, so
/// the non-causal CTF shift cancels and only the modeling delay remains.
Spectrogram recover_source(const InverseFilterSet& filters, const Spectrogram& mics);

}  // namespace ctfsep
