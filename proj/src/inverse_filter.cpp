// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/inverse_filter.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ctfsep {

namespace {

void require_finite(const MatrixXcd& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}

// Solves the Hermitian positive-definite system `normal h = rhs`.
VectorXcd hpd_solve(const MatrixXcd& normal, const VectorXcd& rhs) {
  Eigen::LLT<MatrixXcd> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw NumericError("normal equations are not positive definite; use a larger regularization");
  }
  VectorXcd h = llt.solve(rhs);
  if (!h.allFinite()) throw NumericError("inverse filter solve produced non-finite values");
  return h;
}

VectorXcd min_norm_solve(const MatrixXcd& a, const VectorXcd& rhs) {
  Eigen::CompleteOrthogonalDecomposition<MatrixXcd> cod(a);
  VectorXcd h = cod.solve(rhs);
  if (!h.allFinite()) throw NumericError("least-squares solve produced non-finite values");
  return h;
}

// C^H C for C = [T(f_1) ... T(f_I)] stacked over channels c, where T(f) is the
// full convolution matrix of f with `filter_len` columns. Row i of filters[c]
// is f_i for channel c. The entry at ((i, l), (m, l')) is the correlation
// sum_c sum_n conj(f_i[n]) f_m[n + l - l'], so C is never formed.
MatrixXcd convolution_gram(const std::vector<MatrixXcd>& filters, Index filter_len) {
  const Index blocks = filters.front().rows();
  const Index len = filters.front().cols();
  const Index lags = std::min(len, filter_len);
  MatrixXcd g = MatrixXcd::Zero(blocks * filter_len, blocks * filter_len);
  VectorXcd corr(2 * lags - 1);
  for (Index i = 0; i < blocks; ++i) {
    for (Index m = 0; m < blocks; ++m) {
      for (Index tau = -(lags - 1); tau < lags; ++tau) {
        const Index n0 = std::max<Index>(0, -tau);
        const Index count = std::min(len, len - tau) - n0;
        cdouble acc = 0.0;
        for (const auto& f : filters) {
          acc += f.row(i).segment(n0, count).conjugate().cwiseProduct(f.row(m).segment(n0 + tau, count)).sum();
        }
        corr(tau + lags - 1) = acc;
      }
      for (Index l = 0; l < filter_len; ++l) {
        for (Index lp = std::max<Index>(0, l - lags + 1); lp < std::min(filter_len, l + lags); ++lp) {
          g(i * filter_len + l, m * filter_len + lp) = corr(l - lp + lags - 1);
        }
      }
    }
  }
  return g;
}

// A^H A of the stacked MINT system over `sources`, from the CTF taps.
MatrixXcd ctf_gram(const BinCtf& ctf, const std::vector<Index>& sources, Index filter_len) {
  std::vector<MatrixXcd> filters;
  for (Index j : sources) {
    MatrixXcd f(ctf.mics(), ctf.taps());
    for (Index i = 0; i < ctf.mics(); ++i) f.row(i) = ctf.filter(i, j);
    filters.push_back(std::move(f));
  }
  return convolution_gram(filters, filter_len);
}

std::vector<Index> all_sources(const BinCtf& ctf) {
  std::vector<Index> out;
  for (Index j = 0; j < ctf.sources(); ++j) out.push_back(j);
  return out;
}

MatrixXcd unstack(const VectorXcd& h, Index filter_len, Index mics) {
  MatrixXcd out(filter_len, mics);
  for (Index i = 0; i < mics; ++i) out.col(i) = h.segment(i * filter_len, filter_len);
  return out;
}

Index target_filter_len(const BinCtf& ctf, const TargetSignal& target) {
  const Index len = target.d.size() - ctf.taps() + 1;
  require(len >= 1, "target shorter than the CTF");
  return len;
}

// [A^{1,j} ... A^{I,j}] for a single source.
MatrixXcd source_block(const BinCtf& ctf, Index j, Index filter_len) {
  const Index rows = ctf.taps() + filter_len - 1;
  MatrixXcd block(rows, ctf.mics() * filter_len);
  for (Index i = 0; i < ctf.mics(); ++i) {
    block.middleCols(i * filter_len, filter_len) =
        convolution_matrix(ctf.filter(i, j).transpose(), filter_len);
  }
  return block;
}

}  // namespace

std::string to_string(FilterMethod method) {
  return method == FilterMethod::mint ? "mint" : "mpdr";
}

Index filter_length(FilterMethod method, Index mics, Index sources, Index ctf_taps,
                    double ratio) {
  require(mics >= 1 && sources >= 1 && ctf_taps >= 1, "filter_length: empty dimension");
  require(ratio > 0.0, "filter_length: ratio must be positive");
  const double effective_sources = method == FilterMethod::mint ? static_cast<double>(sources) : 1.0;
  const double columns_per_row = ratio * effective_sources;
  const double spare = static_cast<double>(mics) - columns_per_row;
  if (!(spare > 0.0)) {
    throw ArgumentError("infinite filter length: ratio must be below " +
                        std::string(method == FilterMethod::mint ? "I/J" : "I"));
  }
  // (L_a - 1) / (I / (ratio J) - 1) == (L_a - 1) ratio J / (I - ratio J)
  const double exact = static_cast<double>(ctf_taps - 1) * columns_per_row / spare;
  const auto len = static_cast<Index>(std::ceil(exact - 1e-9));
  return std::max<Index>(1, len);
}

double auto_mint_ratio(Index mics, Index sources) {
  if (mics > sources) return 1.0;
  constexpr double kLengthFactor = 4.5;
  return static_cast<double>(mics) /
         (static_cast<double>(sources) * (1.0 + 1.0 / kLengthFactor));
}

TargetSignal build_target(Index ctf_taps, Index filter_len, Index delay,
                          const VectorXcd& zeta_taps) {
  require(ctf_taps >= 1 && filter_len >= 1, "build_target: empty dimension");
  require(delay >= 0, "build_target: negative delay");
  const Index len = ctf_taps + filter_len - 1;
  require(delay + zeta_taps.size() <= len,
          "build_target: delay plus zeta taps exceed L_a + L_h - 1");
  TargetSignal t;
  t.delay = delay;
  t.zeta_taps = zeta_taps;
  t.d = VectorXcd::Zero(len);
  t.d.segment(delay, zeta_taps.size()) = zeta_taps;
  return t;
}

void build_mint_system(const BinCtf& ctf, Index desired, const TargetSignal& target,
                       MatrixXcd& a, VectorXcd& g) {
  require(desired >= 0 && desired < ctf.sources(), "desired source out of range");
  const Index filter_len = target_filter_len(ctf, target);
  const Index rows = target.d.size();
  a.resize(ctf.sources() * rows, ctf.mics() * filter_len);
  for (Index j = 0; j < ctf.sources(); ++j) a.middleRows(j * rows, rows) = source_block(ctf, j, filter_len);
  g = VectorXcd::Zero(a.rows());
  g.segment(desired * rows, rows) = target.d;
}

namespace {

// One bin's MINT solve given the stacked system; `normal` is the lower
// triangle of A^H A, or empty when delta is zero.
BinFilter solve_mint_system(const BinCtf& ctf, Index desired, double delta,
                            const TargetSignal& target, const MatrixXcd& a,
                            const MatrixXcd& normal) {
  const Index filter_len = target_filter_len(ctf, target);
  const Index rows = target.d.size();
  VectorXcd g = VectorXcd::Zero(a.rows());
  g.segment(desired * rows, rows) = target.d;

  BinFilter out;
  const double phi = ctf_energy(ctf, desired);
  if (!(phi > 0.0)) {
    out.h = MatrixXcd::Zero(filter_len, ctf.mics());
    out.residual = g.squaredNorm();
    out.degenerate = true;
    return out;
  }

  VectorXcd h;
  if (delta > 0.0) {
    MatrixXcd reg = normal;
    reg.diagonal().array() += delta * phi;
    h = hpd_solve(reg, a.adjoint() * g);
  } else {
    h = min_norm_solve(a, g);
  }
  out.residual = (a * h - g).squaredNorm();
  out.h = unstack(h, filter_len, ctf.mics());
  return out;
}

}  // namespace

BinFilter solve_mint(const BinCtf& ctf, Index desired, double delta,
                     const TargetSignal& target) {
  require(delta >= 0.0, "solve_mint: delta must be non-negative");
  require_finite(ctf.coeffs(), "CTF");
  require_finite(target.d, "target");

  MatrixXcd a;
  VectorXcd g;
  build_mint_system(ctf, desired, target, a, g);
  return solve_mint_system(ctf, desired, delta, target, a, delta > 0.0 ? ctf_gram(ctf, all_sources(ctf), target_filter_len(ctf, target)) : MatrixXcd());
}

BinFilter solve_mpdr(const BinCtf& ctf, Index desired, const MatrixXcd& mics, double kappa,
                     const TargetSignal& target) {
  require(kappa >= 0.0, "solve_mpdr: kappa must be non-negative");
  require(desired >= 0 && desired < ctf.sources(), "desired source out of range");
  require(mics.cols() == ctf.mics(), "solve_mpdr: mic count mismatch");
  require_finite(ctf.coeffs(), "CTF");
  require_finite(mics, "microphone signals");
  require_finite(target.d, "target");

  const Index filter_len = target_filter_len(ctf, target);
  BinFilter out;
  const double phi_a = ctf_energy(ctf, desired);
  if (!(phi_a > 0.0)) {
    out.h = MatrixXcd::Zero(filter_len, ctf.mics());
    out.residual = target.d.squaredNorm();
    out.degenerate = true;
    return out;
  }

  const MatrixXcd a = source_block(ctf, desired, filter_len);
  const double phi_x = mics.squaredNorm();
  const double weight = phi_x > 0.0 ? kappa * phi_a / phi_x : 0.0;

  VectorXcd h;
  if (weight > 0.0) {
    MatrixXcd normal = ctf_gram(ctf, {desired}, filter_len);
    normal += weight * convolution_gram({mics.transpose()}, filter_len);
    h = hpd_solve(normal, a.adjoint() * target.d);
  } else {
    h = min_norm_solve(a, target.d);
  }
  out.residual = (a * h - target.d).squaredNorm();
  out.h = unstack(h, filter_len, ctf.mics());
  return out;
}

InverseFilterSet design_mint(const CtfTensor& ctf, Index desired, const IfSolverConfig& cfg,
                             const WindowPair& win) {
  return std::move(design_mint(ctf, std::vector<Index>{desired}, cfg, win).front());
}

std::vector<InverseFilterSet> design_mint(const CtfTensor& ctf, const std::vector<Index>& desired,
                                          const IfSolverConfig& cfg, const WindowPair& win) {
  require(ctf.bins() == win.bins(), "design_mint: CTF and window bin counts differ");
  require(cfg.delta >= 0.0, "design_mint: delta must be non-negative");
  const Index filter_len =
      filter_length(FilterMethod::mint, ctf.mics(), ctf.sources(), ctf.taps(), cfg.rho);
  std::vector<InverseFilterSet> sets(desired.size());
  for (std::size_t d = 0; d < desired.size(); ++d) {
    require(desired[d] >= 0 && desired[d] < ctf.sources(), "desired source out of range");
    sets[d].method = FilterMethod::mint;
    sets[d].desired = desired[d];
    sets[d].regularization = cfg.delta;
    sets[d].delay = cfg.delay_mint;
    sets[d].filter_len = filter_len;
  }

  const CtfTensor zeta = impulse_ctf(win);
  MatrixXcd a;
  VectorXcd g;
  for (Index k = 0; k < ctf.bins(); ++k) {
    const BinCtf& bin = ctf.bin(k);
    require_finite(bin.coeffs(), "CTF");
    const TargetSignal target = build_target(ctf.taps(), filter_len, cfg.delay_mint,
                                             zeta.bin(k).filter(0, 0).transpose());
    // The system matrix does not depend on the desired source.
    build_mint_system(bin, 0, target, a, g);
    const MatrixXcd normal = cfg.delta > 0.0 ? ctf_gram(bin, all_sources(bin), filter_len) : MatrixXcd();
    for (auto& set : sets) {
      BinFilter bf = solve_mint_system(bin, set.desired, cfg.delta, target, a, normal);
      if (bf.degenerate) set.degenerate_bins.push_back(k);
      set.residuals.push_back(bf.residual);
      set.h.push_back(std::move(bf.h));
    }
  }
  return sets;
}

InverseFilterSet design_mpdr(const CtfTensor& ctf, const Spectrogram& mics, Index desired,
                             const IfSolverConfig& cfg, const WindowPair& win) {
  require(ctf.bins() == win.bins() && mics.bins() == ctf.bins(),
          "design_mpdr: bin counts differ");
  require(mics.channels() == ctf.mics(), "design_mpdr: mic count mismatch");
  InverseFilterSet set;
  set.method = FilterMethod::mpdr;
  set.desired = desired;
  set.regularization = cfg.kappa;
  set.delay = cfg.delay_mpdr;
  set.filter_len = filter_length(FilterMethod::mpdr, ctf.mics(), 1, ctf.taps(), cfg.varrho);

  const CtfTensor zeta = impulse_ctf(win);
  for (Index k = 0; k < ctf.bins(); ++k) {
    const TargetSignal target = build_target(ctf.taps(), set.filter_len, cfg.delay_mpdr,
                                             zeta.bin(k).filter(0, 0).transpose());
    BinFilter bf = solve_mpdr(ctf.bin(k), desired, mics.bin(k), cfg.kappa, target);
    if (bf.degenerate) set.degenerate_bins.push_back(k);
    set.residuals.push_back(bf.residual);
    set.h.push_back(std::move(bf.h));
  }
  return set;
}

Spectrogram apply_inverse_filter(const InverseFilterSet& filters, const Spectrogram& mics) {
  require(filters.bins() == mics.bins(), "apply_inverse_filter: bin count mismatch");
  require(filters.mics() == mics.channels(), "apply_inverse_filter: mic count mismatch");
  const Index filter_len = filters.h.front().rows();
  Spectrogram out = mics.like(1, mics.frames() + filter_len - 1);
  BinCtf as_filter(1, mics.channels(), filter_len);
  for (Index k = 0; k < mics.bins(); ++k) {
    for (Index i = 0; i < mics.channels(); ++i) as_filter.filter(0, i) = filters.h[k].col(i).transpose();
    out.set_bin(k, ctf_convolve(as_filter, mics.bin(k)));
  }
  return out;
}

Spectrogram compensate_delay(const Spectrogram& y, Index advance, Index frames) {
  require(advance >= 0, "compensate_delay: negative advance");
  return align_to_stft(y, advance, frames);
}

Spectrogram recover_source(const InverseFilterSet& filters, const Spectrogram& mics) {
  return compensate_delay(apply_inverse_filter(filters, mics), filters.delay, mics.frames());
}

}  // namespace ctfsep
