#include "spice/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace spice::conformal {

Split split_indices(Index n, std::uint64_t seed) {
  if (n < 2) throw DataError("conformal split needs at least 2 rows");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  Split out;
  out.train.assign(order.begin(), order.begin() + half);
  out.calibration.assign(order.begin() + half, order.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.calibration.begin(), out.calibration.end());
  return out;
}

Index conformal_rank(Index n2, double kappa_cov) {
  const double product = static_cast<double>(n2 + 1) * kappa_cov;
  const double nearest = std::round(product);
  if (std::abs(product - nearest) <= 1e-9 * std::max(1.0, product)) return static_cast<Index>(nearest);
  return static_cast<Index>(std::ceil(product));
}

ConformalCalibrator ConformalCalibrator::calibrate(std::vector<double> residuals, double kappa_cov) {
  if (residuals.empty()) throw DataError("no calibration residuals");
  if (!(kappa_cov > 0.0 && kappa_cov < 1.0)) throw DataError("coverage level must lie in (0, 1)");
  for (double r : residuals)
    if (!(r >= 0.0) || !std::isfinite(r))
      throw DataError("calibration residuals must be finite and nonnegative");
  std::stable_sort(residuals.begin(), residuals.end());
  const Index rank = conformal_rank(static_cast<Index>(residuals.size()), kappa_cov);
  return ConformalCalibrator(std::move(residuals), kappa_cov, rank);
}

double ConformalCalibrator::half_width() const {
  if (!bounded())
    throw NumericalError("conformal interval is unbounded: k = " + std::to_string(rank_) +
                         " exceeds " + std::to_string(sorted_.size()) + " calibration residuals");
  return sorted_[static_cast<std::size_t>(rank_ - 1)];
}

std::pair<double, double> ConformalCalibrator::interval(double y_hat) const {
  const double r = half_width();
  return {y_hat - r, y_hat + r};
}

}  // namespace spice::conformal
