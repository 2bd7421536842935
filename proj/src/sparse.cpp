// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/sparse.hpp"

#include <algorithm>

namespace ctfsep {

namespace {

std::uint64_t bin_seed(std::uint64_t seed, Index k) {
  return seed ^ (static_cast<std::uint64_t>(k + 1) * 0x9E3779B97F4A7C15ULL);
}

void require_finite(const MatrixXcd& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}

}  // namespace

BinOperator::BinOperator(const BinCtf& ctf, Index causal_shift, Index frames)
    : ctf_(ctf), shift_(causal_shift), frames_(frames) {
  require(frames >= 1, "BinOperator: no frames");
  require(causal_shift >= 0 && causal_shift < ctf.taps(), "BinOperator: bad causal shift");
}

MatrixXcd BinOperator::forward(const MatrixXcd& s) const {
  require(s.rows() == frames_, "BinOperator::forward: frame count mismatch");
  return ctf_convolve(ctf_, s).middleRows(shift_, frames_);
}

MatrixXcd BinOperator::adjoint(const MatrixXcd& r) const {
  require(r.rows() == frames_ && r.cols() == ctf_.mics(), "BinOperator::adjoint: shape mismatch");
  MatrixXcd padded = MatrixXcd::Zero(frames_ + ctf_.taps() - 1, ctf_.mics());
  padded.middleRows(shift_, frames_) = r;
  return ctf_adjoint(ctf_, padded);
}

PowerIterationResult power_iteration(const BinOperator& op, std::uint64_t seed) {
  return power_iteration([&op](const MatrixXcd& v) { return op.forward(v); },
                         [&op](const MatrixXcd& r) { return op.adjoint(r); }, op.frames(),
                         op.sources(), seed);
}

BinTolerance compute_bin_tolerance(const VectorXd& noise_psd, Index frames, double mic_energy,
                                   double signal_fraction) {
  require((noise_psd.array() >= 0.0).all(), "compute_tolerance: negative noise PSD");
  require(frames >= 1, "compute_tolerance: no frames");
  BinTolerance t;
  t.noise_psd = noise_psd;
  t.frames = frames;
  const double p = static_cast<double>(frames);
  const double mean = p * noise_psd.sum();
  const double variance = p * noise_psd.array().square().sum();
  t.eps_e = std::max(0.0, mean - 2.0 * std::sqrt(variance));
  t.gamma_s = std::max(mic_energy - mean, 0.0);
  t.eps_s = signal_fraction * t.gamma_s;
  t.eps = t.eps_e + t.eps_s;
  return t;
}

ToleranceModel compute_tolerance(const MatrixXd& noise_psd, const Spectrogram& mics,
                                 double signal_fraction) {
  require(noise_psd.rows() == mics.bins() && noise_psd.cols() == mics.channels(),
          "compute_tolerance: noise PSD must be bins x mics");
  ToleranceModel model;
  model.reserve(mics.bins());
  for (Index k = 0; k < mics.bins(); ++k) {
    model.push_back(compute_bin_tolerance(noise_psd.row(k).transpose(), mics.frames(),
                                          mics.bin(k).squaredNorm(), signal_fraction));
  }
  return model;
}

void validate(const ClassoConfig& cfg) {
  require(cfg.alpha > 0.0 && cfg.alpha < 2.0, "classo: alpha must lie in (0, 2)");
  require(cfg.gamma > 0.0, "classo: gamma must be positive");
  require(cfg.eta1 >= 0.0, "classo: eta1 must be non-negative");
  require(cfg.max_outer >= 1 && cfg.max_inner >= 1, "classo: iteration caps must be positive");
  require(cfg.mu_scale > 0.0 && cfg.mu_scale < 2.0, "classo: mu must lie in (0, 2/nu)");
  require(cfg.slack >= 1.0, "classo: slack must be at least 1");
}

ProjectionResult project_constraint(const MatrixXcd& s, const BinOperator& op,
                                    const MatrixXcd& x, double eps, double nu,
                                    const ClassoConfig& cfg) {
  require(eps >= 0.0, "project_constraint: eps must be non-negative");
  require(x.rows() == op.frames() && x.cols() == op.mics(), "project_constraint: x shape");
  require_finite(s, "projection input");
  require_finite(x, "microphone signals");

  ProjectionResult out;
  out.p = s;
  MatrixXcd ap = op.forward(s);
  out.residual = (ap - x).squaredNorm();
  const double bound = cfg.slack * eps;
  if (out.residual <= bound) {
    out.converged = true;
    return out;
  }
  if (!(nu > 0.0)) return out;

  // The dual starts at zero so that the first primal point is s itself.
  const double mu = cfg.mu_scale / nu;
  MatrixXcd u = MatrixXcd::Zero(x.rows(), x.cols());
  MatrixXcd u_tilde = u;
  double t = 1.0;
  for (int l = 1; l <= cfg.max_inner; ++l) {
    const MatrixXcd v = u_tilde / mu + ap - x;
    const MatrixXcd u_next = mu * (v - project_ball(v, eps));
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    u_tilde = u_next + ((t - 1.0) / t_next) * (u_next - u);
    u = u_next;
    t = t_next;

    out.p = s - op.adjoint(u_tilde);
    ap = op.forward(out.p);
    out.residual = (ap - x).squaredNorm();
    out.iterations = l;
    if (!std::isfinite(out.residual)) throw NumericError("project_constraint: diverged");
    if (out.residual <= bound) {
      out.converged = true;
      break;
    }
  }
  return out;
}

bool SparseResult::all_feasible() const {
  return std::all_of(bins.begin(), bins.end(), [](const ClassoBinReport& r) { return r.feasible; });
}

MatrixXcd solve_classo_bin(const BinOperator& op, const MatrixXcd& x, double eps,
                           const ClassoConfig& cfg, std::uint64_t seed,
                           ClassoBinReport* report) {
  require(x.rows() == op.frames() && x.cols() == op.mics(), "solve_classo: x shape");
  require(eps >= 0.0, "solve_classo: eps must be non-negative");
  ClassoBinReport local;
  ClassoBinReport& rep = report ? *report : local;
  rep = ClassoBinReport{};
  rep.eps = eps;

  const MatrixXcd zero = MatrixXcd::Zero(op.frames(), op.sources());
  const double energy = x.squaredNorm();
  if (energy <= eps) {
    rep.converged = rep.feasible = true;
    rep.residual = energy;
    return zero;
  }

  rep.nu = power_iteration(op, seed).nu;
  if (!(rep.nu > 0.0)) {
    rep.residual = energy;
    return zero;
  }

  MatrixXcd s = x.col(0).replicate(1, op.sources());
  MatrixXcd z = s;
  double previous_l1 = l1_norm(s);
  for (int l = 1; l <= cfg.max_outer; ++l) {
    const ProjectionResult proj = project_constraint(s, op, x, eps, rep.nu, cfg);
    z = proj.p;
    rep.residual = proj.residual;
    rep.inner_iterations += proj.iterations;
    rep.outer_iterations = l;
    s += cfg.alpha * (shrinkage(2.0 * z - s, cfg.gamma) - z);
    const double current_l1 = l1_norm(s);
    if (current_l1 == 0.0 || std::abs(current_l1 - previous_l1) < cfg.eta1 * current_l1) {
      rep.converged = true;
      break;
    }
    previous_l1 = current_l1;
  }
  rep.feasible = rep.residual <= cfg.slack * eps;
  return z;
}

SparseResult solve_classo(const CtfTensor& ctf, const Spectrogram& mics,
                          const ToleranceModel& tol, const ClassoConfig& cfg) {
  validate(cfg);
  require(ctf.bins() == mics.bins(), "solve_classo: bin count mismatch");
  require(ctf.mics() == mics.channels(), "solve_classo: mic count mismatch");
  require(static_cast<Index>(tol.size()) == mics.bins(), "solve_classo: tolerance per bin");

  SparseResult out;
  out.sources = mics.like(ctf.sources(), mics.frames());
  out.bins.resize(mics.bins());
  for (Index k = 0; k < mics.bins(); ++k) {
    const BinOperator op(ctf.bin(k), ctf.causal_shift(), mics.frames());
    out.sources.set_bin(k, solve_classo_bin(op, mics.bin(k), tol[k].eps, cfg,
                                            bin_seed(cfg.seed, k), &out.bins[k]));
  }
  return out;
}

double lasso_objective(const BinOperator& op, const MatrixXcd& s, const MatrixXcd& x,
                       double lambda) {
  return (op.forward(s) - x).squaredNorm() + lambda * l1_norm(s);
}

MatrixXcd solve_lasso_bin(const BinOperator& op, const MatrixXcd& x, double lambda,
                          const LassoConfig& cfg, std::uint64_t seed,
                          ClassoBinReport* report) {
  require(lambda >= 0.0, "solve_lasso: lambda must be non-negative");
  require(x.rows() == op.frames() && x.cols() == op.mics(), "solve_lasso: x shape");
  require_finite(x, "microphone signals");
  ClassoBinReport local;
  ClassoBinReport& rep = report ? *report : local;
  rep = ClassoBinReport{};

  MatrixXcd s = MatrixXcd::Zero(op.frames(), op.sources());
  rep.nu = power_iteration(op, seed).nu;
  if (!(rep.nu > 0.0)) {
    rep.residual = x.squaredNorm();
    return s;
  }

  // Halved objective 1/2 ||A s - x||^2 + lambda/2 |s|_1 has a 1/nu-Lipschitz step.
  const double step = 1.0 / rep.nu;
  const double threshold = 0.5 * lambda * step;
  MatrixXcd y = s;
  double t = 1.0;
  double previous = lasso_objective(op, s, x, lambda);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const MatrixXcd grad = op.adjoint(op.forward(y) - x);
    const MatrixXcd s_next = shrinkage(y - step * grad, threshold);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    y = s_next + ((t - 1.0) / t_next) * (s_next - s);
    s = s_next;
    t = t_next;
    rep.outer_iterations = it;
    const double current = lasso_objective(op, s, x, lambda);
    if (!std::isfinite(current)) throw NumericError("solve_lasso: diverged");
    if (std::abs(current - previous) <= cfg.rel_tol * std::max(previous, 1e-300)) {
      rep.converged = true;
      break;
    }
    previous = current;
  }
  rep.residual = (op.forward(s) - x).squaredNorm();
  rep.feasible = true;
  return s;
}

SparseResult solve_lasso_fista(const CtfTensor& ctf, const Spectrogram& mics, double lambda,
                               const LassoConfig& cfg) {
  require(ctf.bins() == mics.bins(), "solve_lasso: bin count mismatch");
  require(ctf.mics() == mics.channels(), "solve_lasso: mic count mismatch");
  require(cfg.max_iter >= 1, "solve_lasso: max_iter must be positive");
  SparseResult out;
  out.sources = mics.like(ctf.sources(), mics.frames());
  out.bins.resize(mics.bins());
  for (Index k = 0; k < mics.bins(); ++k) {
    const BinOperator op(ctf.bin(k), ctf.causal_shift(), mics.frames());
    out.sources.set_bin(k, solve_lasso_bin(op, mics.bin(k), lambda, cfg,
                                           bin_seed(cfg.seed, k), &out.bins[k]));
  }
  return out;
}

}  // namespace ctfsep
