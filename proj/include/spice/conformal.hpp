#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spice/common.hpp"

namespace spice::conformal {

/// Disjoint, exhaustive split of 0..n-1 into a training half and a
/// calibration half. The training half gets floor(n/2) rows, so odd n gives
/// the extra row to calibration. Both index lists are ascending.
struct Split {
  std::vector<Index> train;
  std::vector<Index> calibration;
};

/// Throws DataError when n < 2.
Split split_indices(Index n, std::uint64_t seed);

/// Symmetric interval [y_hat - r, y_hat + r] from the k-th smallest
/// calibration residual, k = ceil((n2 + 1) * kappa_cov).
class ConformalCalibrator {
 public:
  /// `residuals` are absolute calibration residuals. Throws DataError for an
  /// empty, negative or non-finite residual set, or kappa_cov outside (0, 1).
  static ConformalCalibrator calibrate(std::vector<double> residuals, double kappa_cov);

  /// False when k exceeds the number of calibration residuals.
  bool bounded() const { return rank_ <= static_cast<Index>(sorted_.size()); }
  /// 1-based order statistic index k.
  Index rank() const { return rank_; }
  double coverage() const { return kappa_cov_; }
  const std::vector<double>& residuals() const { return sorted_; }

  /// r-bar. Throws NumericalError when unbounded.
  double half_width() const;
  /// Throws NumericalError when unbounded.
  std::pair<double, double> interval(double y_hat) const;

 private:
  ConformalCalibrator(std::vector<double> sorted, double kappa_cov, Index rank)
      : sorted_(std::move(sorted)), kappa_cov_(kappa_cov), rank_(rank) {}

  std::vector<double> sorted_;
  double kappa_cov_;
  Index rank_;
};

/// ceil((n2 + 1) * kappa_cov), guarded against products that land a rounding
/// error above an integer.
Index conformal_rank(Index n2, double kappa_cov);

}  // namespace spice::conformal
