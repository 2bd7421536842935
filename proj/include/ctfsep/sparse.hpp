// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ctfsep/ctf.hpp"
#include "ctfsep/types.hpp"

namespace ctfsep {

/// Entry-wise soft thresholding: y = z / |z| * max(0, |z| - gamma), y = 0 at z = 0.
template <typename Derived>
Matrix<typename Derived::Scalar> shrinkage(const Eigen::MatrixBase<Derived>& z, double gamma) {
  using Scalar = typename Derived::Scalar;
  require(gamma >= 0.0, "shrinkage: gamma must be non-negative");
  if (gamma == 0.0) return z;
  return z.unaryExpr([gamma](const Scalar& v) -> Scalar {
    const double mag = std::abs(v);
    if (mag <= gamma) return Scalar(0);
    return (v / mag) * (mag - gamma);
  });
}

/// Projection onto the ball {v : ||v||^2 <= eps}.
template <typename Derived>
Matrix<typename Derived::Scalar> project_ball(const Eigen::MatrixBase<Derived>& u, double eps) {
  require(eps >= 0.0, "project_ball: eps must be non-negative");
  const double norm = u.norm();
  const double radius = std::sqrt(eps);
  if (norm <= radius) return u;
  return (u / norm) * radius;
}

/// The CTF operator of one bin restricted to the observed frame window.
///
/// forward(s) maps frames x J sources to frames x I mics: the full convolution
/// with the CTFs, advanced by the causal shift and cut to the same frame count
/// as the mic STFT. adjoint() is its exact adjoint.
class BinOperator {
 public:
  BinOperator(const BinCtf& ctf, Index causal_shift, Index frames);

  Index frames() const { return frames_; }
  Index mics() const { return ctf_.mics(); }
  Index sources() const { return ctf_.sources(); }

  MatrixXcd forward(const MatrixXcd& s) const;
  MatrixXcd adjoint(const MatrixXcd& r) const;

 private:
  const BinCtf& ctf_;
  Index shift_;
  Index frames_;
};

struct PowerIterationResult {
  double nu = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of adjoint(forward(.)) from a seeded complex Gaussian
/// start. Stops when ||w|| changes by less than `tol` relatively.
template <typename Forward, typename Adjoint>
PowerIterationResult power_iteration(Forward&& forward, Adjoint&& adjoint, Index rows,
                                     Index cols, std::uint64_t seed, int max_iter = 100,
                                     double tol = 1e-6) {
  require(rows >= 1 && cols >= 1, "power_iteration: empty shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  MatrixXcd v(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) v(r, c) = cdouble(normal(rng), normal(rng));
  }
  v /= v.norm();

  PowerIterationResult out;
  double previous = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const MatrixXcd w = adjoint(forward(v));
    const double norm = w.norm();
    out.iterations = it;
    if (!std::isfinite(norm)) throw NumericError("power_iteration: non-finite operator output");
    if (norm == 0.0) {
      out.nu = 0.0;
      out.converged = true;
      return out;
    }
    v = w / norm;
    out.nu = norm;
    if (it > 1 && std::abs(norm - previous) <= tol * norm) {
      out.converged = true;
      break;
    }
    previous = norm;
  }
  return out;
}

/// Frame bound of one bin's operator; the seed is fixed per bin.
PowerIterationResult power_iteration(const BinOperator& op, std::uint64_t seed);

/// l2 tolerance of one bin.
struct BinTolerance {
  VectorXd noise_psd;  // sigma_i^2 per mic
  Index frames = 0;
  double eps_e = 0.0;    // max(0, sum P sigma^2 - 2 sqrt(sum P sigma^4))
  double gamma_s = 0.0;  // max(||x||^2 - sum P sigma^2, 0)
  double eps_s = 0.0;    // 0.01 gamma_s
  double eps = 0.0;      // eps_e + eps_s
};

using ToleranceModel = std::vector<BinTolerance>;

BinTolerance compute_bin_tolerance(const VectorXd& noise_psd, Index frames, double mic_energy,
                                   double signal_fraction = 0.01);

/// `noise_psd` is bins x mics, in units of E|e_{p,k}|^2 for the STFT in use.
ToleranceModel compute_tolerance(const MatrixXd& noise_psd, const Spectrogram& mics,
                                 double signal_fraction = 0.01);

struct ClassoConfig {
  double alpha = 1.0;
  double gamma = 0.01;
  double eta1 = 0.01;
  int max_outer = 20;
  double mu_scale = 1.0;  // mu = mu_scale / nu
  int max_inner = 300;
  double slack = 1.1;
  std::uint64_t seed = 0;
};

void validate(const ClassoConfig& cfg);

struct ProjectionResult {
  MatrixXcd p;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // ||forward(p) - x||^2
};

/// Projection of s onto {p : ||forward(p) - x||^2 <= eps} by accelerated
/// dual forward-backward iterations with step mu = mu_scale / nu.
ProjectionResult project_constraint(const MatrixXcd& s, const BinOperator& op,
                                    const MatrixXcd& x, double eps, double nu,
                                    const ClassoConfig& cfg);

struct ClassoBinReport {
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;  // eta1 rule met before max_outer
  bool feasible = false;   // ||A s - x||^2 <= slack eps
  double residual = 0.0;
  double eps = 0.0;
  double nu = 0.0;
};

struct SparseResult {
  Spectrogram sources;  // J channels, mic frame grid
  std::vector<ClassoBinReport> bins;

  bool all_feasible() const;
};

/// Douglas-Rachford solution of min |s|_1 s.t. ||A s - x||^2 <= eps, per bin.
/// The emitted iterate is the projected z, so the constraint holds up to the
/// slack unless the bin is flagged infeasible.
SparseResult solve_classo(const CtfTensor& ctf, const Spectrogram& mics,
                          const ToleranceModel& tol, const ClassoConfig& cfg);

/// One bin of solve_classo; `x` is frames x I.
MatrixXcd solve_classo_bin(const BinOperator& op, const MatrixXcd& x, double eps,
                           const ClassoConfig& cfg, std::uint64_t seed,
                           ClassoBinReport* report = nullptr);

struct LassoConfig {
  int max_iter = 500;
  double rel_tol = 1e-4;
  std::uint64_t seed = 0;
};

/// FISTA on ||A s - x||^2 + lambda |s|_1, per bin. Each iteration is a
/// gradient step of size 1/nu on the halved objective.
SparseResult solve_lasso_fista(const CtfTensor& ctf, const Spectrogram& mics, double lambda,
                               const LassoConfig& cfg = {});

MatrixXcd solve_lasso_bin(const BinOperator& op, const MatrixXcd& x, double lambda,
                          const LassoConfig& cfg, std::uint64_t seed,
                          ClassoBinReport* report = nullptr);

/// ||A s - x||^2 + lambda |s|_1.
double lasso_objective(const BinOperator& op, const MatrixXcd& s, const MatrixXcd& x,
                       double lambda);

/// Sum of magnitudes.
template <typename Derived>
double l1_norm(const Eigen::MatrixBase<Derived>& z) {
  return z.cwiseAbs().sum();
}

}  // namespace ctfsep
