// Copyright 2026 The ctfsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctfsep/metrics.hpp"

#include <algorithm>
#include <limits>

namespace ctfsep {

double clamp_db(double db, double cap) {
  if (std::isnan(db)) return -cap;
  return std::clamp(db, -cap, cap);
}

double ratio_db(double num, double den, double cap) {
  if (num <= 0.0) return -cap;
  if (den <= 0.0) return cap;
  return clamp_db(10.0 * std::log10(num / den), cap);
}

MatrixXd delayed_columns(const VectorXd& x, Index taps) {
  require(taps >= 1, "delayed_columns: taps must be positive");
  const Index n = x.size();
  MatrixXd out = MatrixXd::Zero(n, taps);
  for (Index l = 0; l < taps && l < n; ++l) out.col(l).tail(n - l) = x.head(n - l);
  return out;
}

MatrixXd project_filtered(const VectorXd& estimate, const std::vector<VectorXd>& references,
                          Index taps) {
  require(!references.empty(), "project_filtered: no references");
  const Index n = estimate.size();
  const Index refs = static_cast<Index>(references.size());
  MatrixXd basis(n, refs * taps);
  for (Index r = 0; r < refs; ++r) {
    require(references[r].size() == n, "project_filtered: length mismatch");
    basis.middleCols(r * taps, taps) = delayed_columns(references[r], taps);
  }
  const VectorXd coeffs = basis.colPivHouseholderQr().solve(estimate);
  MatrixXd parts(n, refs);
  for (Index r = 0; r < refs; ++r) {
    parts.col(r) = basis.middleCols(r * taps, taps) * coeffs.segment(r * taps, taps);
  }
  return parts;
}

double sdr(const VectorXd& estimate, const VectorXd& reference, Index taps) {
  require(estimate.size() == reference.size(), "sdr: length mismatch");
  if (reference.squaredNorm() == 0.0 || estimate.squaredNorm() == 0.0) return -kMetricCapDb;
  const VectorXd target = project_filtered(estimate, {reference}, taps).col(0);
  return ratio_db(target.squaredNorm(), (estimate - target).squaredNorm());
}

double sir(const VectorXd& estimate, const VectorXd& desired,
           const std::vector<VectorXd>& interferers, Index taps) {
  require(estimate.size() == desired.size(), "sir: length mismatch");
  if (interferers.empty()) return kMetricCapDb;
  std::vector<VectorXd> refs{desired};
  refs.insert(refs.end(), interferers.begin(), interferers.end());
  const MatrixXd parts = project_filtered(estimate, refs, taps);
  const double desired_energy = parts.col(0).squaredNorm();
  const double interference_energy = parts.rightCols(parts.cols() - 1).rowwise().sum().squaredNorm();
  return ratio_db(desired_energy, interference_energy);
}

double output_snr(const VectorXd& signal_part, const VectorXd& noise_part) {
  return ratio_db(signal_part.squaredNorm(), noise_part.squaredNorm());
}

double output_snr_projection(const VectorXd& estimate, const std::vector<VectorXd>& sources,
                             Index taps) {
  const MatrixXd parts = project_filtered(estimate, sources, taps);
  const VectorXd explained = parts.rowwise().sum();
  return ratio_db(explained.squaredNorm(), (estimate - explained).squaredNorm());
}

}  // namespace ctfsep
