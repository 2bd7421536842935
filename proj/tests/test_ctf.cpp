// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ctfsep/ctf.hpp"
#include "test_util.hpp"

using namespace ctfsep;

namespace {

cdouble direct_zeta(const WindowPair& win, Index k, Index n) {
  const Index len = win.frame_len;
  double corr = 0.0;
  for (Index m = 0; m < len; ++m) {
    if (n + m >= 0 && n + m < len) corr += win.analysis(m) * win.synthesis(n + m);
  }
  return std::polar(corr, 2.0 * std::numbers::pi * k * n / len);
}

BinCtf random_bin(std::mt19937_64& rng, Index mics, Index sources, Index taps) {
  BinCtf ctf(mics, sources, taps);
  ctf.coeffs() = test::random_complex(rng, mics * sources, taps);
  return ctf;
}

// x_p^i = sum_j sum_q a_q^{i,j} s_{p-q}^j with three explicit loops.
MatrixXcd naive_convolve(const BinCtf& a, const MatrixXcd& s) {
  const Index frames = s.rows() + a.taps() - 1;
  MatrixXcd x = MatrixXcd::Zero(frames, a.mics());
  for (Index i = 0; i < a.mics(); ++i) {
    for (Index j = 0; j < a.sources(); ++j) {
      for (Index p = 0; p < frames; ++p) {
        for (Index q = 0; q < a.taps(); ++q) {
          if (p - q >= 0 && p - q < s.rows()) x(p, i) += a(i, j, q) * s(p - q, j);
        }
      }
    }
  }
  return x;
}

cdouble inner(const MatrixXcd& a, const MatrixXcd& b) { return (a.conjugate().cwiseProduct(b)).sum(); }

}  // namespace

TEST_SUITE("ctf") {

TEST_CASE("zeta kernel matches the direct formula") {
  const WindowPair win = design_windows(64, 16);
  for (Index k : {0, 3, 16, 32}) {
    const ZetaKernel z = zeta_kernel(win, k);
    REQUIRE(z.dense.size() == 127);
    REQUIRE(z.taps.size() == 2 * 4 - 1);
    for (Index n = -63; n <= 63; ++n) CHECK(std::abs(z.at(n) - direct_zeta(win, k, n)) < 1e-12);
    for (Index p = -3; p <= 3; ++p) CHECK(std::abs(z.taps(p + 3) - z.at(p * 16)) == 0.0);
  }
  CHECK_THROWS_AS(zeta_kernel(win, 33), ArgumentError);
  CHECK_THROWS_AS(zeta_kernel(win, -1), ArgumentError);
}

TEST_CASE("zeta kernel at bin zero is the real window correlation") {
  const WindowPair win = design_windows(64, 16);
  const ZetaKernel z0 = zeta_kernel(win, 0);
  CHECK(z0.dense.imag().cwiseAbs().maxCoeff() == 0.0);
  const ZetaKernel z5 = zeta_kernel(win, 5);
  CHECK((z5.dense.cwiseAbs() - z0.dense.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-14);
  const ZetaKernel zq = zeta_kernel(win, 16);
  double expect = 0.0;
  for (Index m = 0; m < 64; ++m) expect += win.analysis(m) * win.synthesis(m);
  CHECK(std::abs(zq.at(0).imag()) < 1e-15);
  CHECK(zq.at(0).real() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(zq.at(0).real() > 0.0);
}

TEST_CASE("ctf length follows the RIR length") {
  CHECK(ctf_length(5600, 1024, 256) == 29);
  CHECK(ctf_length(1, 1024, 256) == 4 + 3);
  CHECK(ctf_length(512, 256, 64) == 15);
  const WindowPair win = design_windows(256, 64);
  const CtfTensor ctf = rir_to_ctf(RirTensor(2, 1, 512), win);
  CHECK(ctf.taps() == 15);
  CHECK(ctf.causal_shift() == 3);
}

TEST_CASE("ctf of an impulse is the normalized zeta taps") {
  const WindowPair win = design_windows(64, 16);
  RirTensor rir(1, 1, 1);
  rir.filter(0, 0)(0) = 1.0;
  const CtfTensor ctf = rir_to_ctf(rir, win);
  const CtfTensor ref = impulse_ctf(win);
  for (Index k = 0; k < win.bins(); ++k) {
    const VectorXcd taps = zeta_kernel(win, k).normalized_taps();
    for (Index p = 0; p < taps.size(); ++p) {
      CHECK(std::abs(ctf.bin(k)(0, 0, p) - taps(p)) < 1e-15);
      CHECK(std::abs(ref.bin(k)(0, 0, p) - taps(p)) < 1e-15);
    }
  }
}

TEST_CASE("a delay of one hop delays the ctf by one tap") {
  const WindowPair win = design_windows(64, 16);
  RirTensor a(1, 1, 17), b(1, 1, 17);
  a.filter(0, 0)(0) = 1.0;
  b.filter(0, 0)(16) = 1.0;
  const CtfTensor ca = rir_to_ctf(a, win);
  const CtfTensor cb = rir_to_ctf(b, win);
  for (Index k = 0; k < win.bins(); ++k) {
    CHECK(std::abs(cb.bin(k)(0, 0, 0)) < 1e-15);
    for (Index p = 0; p + 1 < ca.taps(); ++p) {
      CHECK(std::abs(cb.bin(k)(0, 0, p + 1) - ca.bin(k)(0, 0, p)) < 1e-15);
    }
  }
}

TEST_CASE("rir_to_ctf matches the sampled convolution with zeta") {
  std::mt19937_64 rng(3);
  const WindowPair win = design_windows(32, 8);
  RirTensor rirs(2, 2, 40);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) rirs.filter(i, j) = test::random_real(rng, 1, 40);
  }
  const CtfTensor ctf = rir_to_ctf(rirs, win);
  const Index shift = win.causal_shift();
  double worst = 0.0;
  for (Index k : {0, 4, 9, 16}) {
    for (Index i = 0; i < 2; ++i) {
      for (Index j = 0; j < 2; ++j) {
        for (Index q = 0; q < ctf.taps(); ++q) {
          const Index n = (q - shift) * 8;
          cdouble acc = 0.0;
          for (Index m = 0; m < 40; ++m) {
            if (std::abs(n - m) < 32) acc += rirs.filter(i, j)(m) * direct_zeta(win, k, n - m);
          }
          worst = std::max(worst, std::abs(ctf.bin(k)(i, j, q) - acc / 32.0));
        }
      }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("ctf_convolve with a unit filter is the identity") {
  std::mt19937_64 rng(4);
  BinCtf one(1, 1, 1);
  one(0, 0, 0) = 1.0;
  const MatrixXcd s = test::random_complex(rng, 9, 1);
  CHECK(test::rel_err(ctf_convolve(one, s), s) == 0.0);
  CHECK(test::rel_err(ctf_adjoint(one, s), s) == 0.0);
  CHECK(ctf_convolve(random_bin(rng, 2, 3, 4), MatrixXcd::Zero(6, 3)).norm() == 0.0);
}

TEST_CASE("ctf_convolve matches the naive loops") {
  std::mt19937_64 rng(5);
  const BinCtf a = random_bin(rng, 2, 2, 3);
  const MatrixXcd s = test::random_complex(rng, 5, 2);
  const MatrixXcd x = ctf_convolve(a, s);
  REQUIRE(x.rows() == 7);
  REQUIRE(x.cols() == 2);
  CHECK(test::rel_err(x, naive_convolve(a, s)) < 1e-12);
}

TEST_CASE("ctf_adjoint satisfies the adjoint identity") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Index mics = 1 + trial % 4, sources = 1 + trial % 3, taps = 1 + trial % 5, frames = 2 + trial;
    const BinCtf a = random_bin(rng, mics, sources, taps);
    const MatrixXcd s = test::random_complex(rng, frames, sources);
    const MatrixXcd r = test::random_complex(rng, frames + taps - 1, mics);
    const cdouble lhs = inner(ctf_convolve(a, s), r);
    const cdouble rhs = inner(s, ctf_adjoint(a, r));
    CHECK(std::abs(lhs - rhs) < 1e-12 * s.norm() * r.norm() * a.coeffs().norm());
  }
}

TEST_CASE("adjoint of a one-frame delay advances and conjugates") {
  BinCtf a(1, 1, 2);
  const cdouble c(0.5, 2.0);
  a(0, 0, 1) = c;
  MatrixXcd r(4, 1);
  r << 1.0, cdouble(0, 1), 3.0, -2.0;
  const MatrixXcd y = ctf_adjoint(a, r);
  REQUIRE(y.rows() == 3);
  for (Index p = 0; p < 3; ++p) CHECK(std::abs(y(p, 0) - std::conj(c) * r(p + 1, 0)) < 1e-15);
}

TEST_CASE("spectrogram-level convolve and adjoint agree with the per-bin versions") {
  std::mt19937_64 rng(8);
  CtfTensor ctf(2, 2, 5, 3, 1);
  for (Index k = 0; k < 5; ++k) ctf.bin(k).coeffs() = test::random_complex(rng, 4, 3);
  Spectrogram s(2, 5, 6, 8, 2, 10, 8000);
  for (Index c = 0; c < 2; ++c) s.channel(c) = test::random_complex(rng, 5, 6);
  const Spectrogram x = ctf_convolve(ctf, s);
  CHECK(x.frames() == 8);
  for (Index k = 0; k < 5; ++k) CHECK(test::rel_err(x.bin(k), ctf_convolve(ctf.bin(k), s.bin(k))) < 1e-15);
  const Spectrogram back = ctf_adjoint(ctf, x);
  CHECK(back.frames() == 6);
  for (Index k = 0; k < 5; ++k) {
    CHECK(test::rel_err(back.bin(k), ctf_adjoint(ctf.bin(k), x.bin(k))) < 1e-15);
  }
  const Spectrogram aligned = align_to_stft(x, 1, 6);
  CHECK(aligned.frames() == 6);
  CHECK(std::abs(aligned(1, 2, 0) - x(1, 2, 1)) == 0.0);
}

TEST_CASE("ctf energy") {
  BinCtf a(2, 2, 3);
  CHECK(ctf_energy(a, 0) == 0.0);
  a(1, 0, 2) = 2.0;
  CHECK(ctf_energy(a, 0) == 4.0);
  CHECK(ctf_energy(a, 1) == 0.0);
  std::mt19937_64 rng(9);
  a.coeffs() = test::random_complex(rng, 4, 3);
  double naive = 0.0;
  for (Index i = 0; i < 2; ++i) {
    for (Index p = 0; p < 3; ++p) naive += std::norm(a(i, 1, p));
  }
  CHECK(ctf_energy(a, 1) == doctest::Approx(naive).epsilon(1e-14));
  CHECK_THROWS_AS(ctf_energy(a, 2), ArgumentError);
}

TEST_CASE("select_sources keeps the requested order") {
  std::mt19937_64 rng(10);
  CtfTensor ctf(2, 3, 2, 2, 1);
  for (Index k = 0; k < 2; ++k) ctf.bin(k).coeffs() = test::random_complex(rng, 6, 2);
  const CtfTensor sub = ctf.select_sources({2, 0});
  CHECK(sub.sources() == 2);
  CHECK(sub.causal_shift() == 1);
  CHECK(std::abs(sub.bin(1)(1, 0, 1) - ctf.bin(1)(1, 2, 1)) == 0.0);
  CHECK(std::abs(sub.bin(0)(0, 1, 0) - ctf.bin(0)(0, 0, 0)) == 0.0);
  CHECK_THROWS_AS(ctf.select_sources({3}), ArgumentError);
}

}
