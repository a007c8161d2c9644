#include "spice/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "spice/baselines.hpp"
#include "spice/stats.hpp"

namespace spice::verify {

namespace {

// Advances `combo` (ascending indices below p) to the next combination of the
// same size in lexicographic order. Returns false after the last one.
bool next_combination(std::vector<Index>& combo, Index p) {
  const auto size = static_cast<Index>(combo.size());
  for (Index i = size - 1; i >= 0; --i) {
    const auto pos = static_cast<std::size_t>(i);
    if (combo[pos] < p - size + i) {
      ++combo[pos];
      for (std::size_t j = pos + 1; j < combo.size(); ++j) combo[j] = combo[j - 1] + 1;
      return true;
    }
  }
  return false;
}

Vector solve_support(const Matrix& X, const Vector& y, const std::vector<Index>& support) {
  Vector w = Vector::Zero(X.cols());
  if (support.empty()) return w;
  Matrix sub(X.rows(), static_cast<Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) sub.col(static_cast<Index>(i)) = X.col(support[i]);
  const Vector coef = sub.completeOrthogonalDecomposition().solve(y);
  for (std::size_t i = 0; i < support.size(); ++i) w[support[i]] = coef[static_cast<Index>(i)];
  return w;
}

// argmin over t of sqrt(max(a - 2 b t + c t^2, 0) / n) + pen |t|, c > 0.
double bisect_coordinate(double a, double b, double c, double n, double pen) {
  const double sqrt_n = std::sqrt(n);
  if (a <= 0.0 || std::abs(b) <= pen * sqrt_n * std::sqrt(a)) return 0.0;
  const double mag_b = std::abs(b);
  auto slope = [&](double tau) {
    const double q = a - 2.0 * mag_b * tau + c * tau * tau;
    if (q <= 0.0) return pen;
    return (c * tau - mag_b) / (sqrt_n * std::sqrt(q)) + pen;
  };
  double lo = 0.0, hi = mag_b / c;
  for (int it = 0; it < 400 && hi - lo > 1e-17 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return std::copysign(0.5 * (lo + hi), b);
}

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

}  // namespace

SparseOracleResult best_subset(const Matrix& X, const Vector& y, Index k) {
  const Index n = X.rows(), p = X.cols();
  if (p > kMaxSubsetColumns || k > kMaxSubsetSize || k < 0)
    throw DataError("best_subset is limited to p <= 16 and k <= 3");
  if (y.size() != n) throw DataError("best_subset: X and y differ in rows");
  if (n == 0) throw DataError("best_subset: no samples");

  SparseOracleResult best;
  best.R_star = std::numeric_limits<double>::infinity();
  for (Index size = 0; size <= std::min(k, p); ++size) {
    std::vector<Index> combo(static_cast<std::size_t>(size));
    for (Index i = 0; i < size; ++i) combo[static_cast<std::size_t>(i)] = i;
    do {
      const Vector w = solve_support(X, y, combo);
      const double risk = (y - X * w).squaredNorm() / static_cast<double>(n);
      if (risk < best.R_star - 1e-12 * std::max(1.0, std::abs(best.R_star)) ||
          !std::isfinite(best.R_star)) {
        best.R_star = risk;
        best.support = combo;
        best.w_star = w;
      }
    } while (size > 0 && next_combination(combo, p));
  }
  best.residuals = y - X * best.w_star;
  // An exact fit leaves rounding-level residuals; treat them as zero.
  if (best.residuals.norm() <= 1e-12 * std::max(1.0, y.norm())) {
    best.residuals.setZero();
    best.R_star = 0.0;
  }
  best.eps_star = (X.transpose() * best.residuals).lpNorm<Eigen::Infinity>();
  return best;
}

double divergence(const Matrix& X, const Vector& w_a, const Vector& w_b) {
  if (w_a.size() != X.cols() || w_b.size() != X.cols())
    throw DataError("divergence: weight length differs from column count");
  if (X.rows() == 0) throw DataError("divergence: no samples");
  return (X * (w_a - w_b)).squaredNorm() / static_cast<double>(X.rows());
}

nlohmann::json BoundReport::to_json() const {
  return {{"premise_holds", premise_holds},
          {"bound", bound},
          {"measured", measured},
          {"pass", pass},
          {"eps_star", eps_star},
          {"R_star", R_star},
          {"support", support},
          {"w_fit", std::vector<double>(w_fit.data(), w_fit.data() + w_fit.size())}};
}

BoundReport check_lasso_bound(const Matrix& X, const Vector& y, Index k, double theta) {
  const SparseOracleResult oracle = best_subset(X, y, k);
  const double n = static_cast<double>(X.rows());
  BoundReport report;
  report.eps_star = oracle.eps_star;
  report.R_star = oracle.R_star;
  report.support = oracle.support;
  report.premise_holds = theta >= 2.0 * oracle.eps_star / n;
  report.bound = 2.0 * theta * oracle.w_star.lpNorm<1>();

  baselines::LassoOptions options;
  options.tol = 1e-13;
  options.max_cycles = 1000000;
  report.w_fit = baselines::lasso_fit(SufficientStats::from_batch(X, y), theta, 0, options).w;
  report.measured = divergence(X, report.w_fit, oracle.w_star);
  report.pass = !report.premise_holds || report.measured <= report.bound + kBoundSlack;
  return report;
}

BoundReport check_spice_bound(const Matrix& X, const Vector& y, Index k, double penalty_inflation) {
  const SparseOracleResult oracle = best_subset(X, y, k);
  const double n = static_cast<double>(X.rows());
  const Vector varphi = penalty_inflation * X.colwise().norm().transpose() / std::sqrt(n);

  BoundReport report;
  report.eps_star = oracle.eps_star;
  report.R_star = oracle.R_star;
  report.support = oracle.support;
  const double scale = std::sqrt(n * oracle.R_star);
  report.premise_holds =
      oracle.eps_star == 0.0 || (varphi.array() * scale >= oracle.eps_star).all();
  const double g = varphi.cwiseProduct(oracle.w_star).lpNorm<1>();
  report.bound = 2.0 / n * g * g + 4.0 * std::sqrt(oracle.R_star / n) * g;

  report.w_fit = reference_spice(X, y, 0, penalty_inflation).w;
  report.measured = divergence(X, report.w_fit, oracle.w_star);
  report.pass = !report.premise_holds || report.measured <= report.bound + kBoundSlack;
  return report;
}

ReferenceResult reference_spice(const Matrix& X, const Vector& y, Index u, double penalty_inflation,
                                double tol, int max_cycles) {
  const Index n = X.rows(), p = X.cols();
  if (y.size() != n) throw DataError("reference_spice: X and y differ in rows");
  if (u < 0 || u > p) throw DataError("reference_spice: u out of range");
  if (n == 0) throw DataError("reference_spice: no samples");

  const double nd = static_cast<double>(n);
  const Vector sq_norms = X.colwise().squaredNorm().transpose();
  ReferenceResult result;
  result.w = Vector::Zero(p);
  Vector r(n);
  while (result.cycles < max_cycles) {
    r = y - X * result.w;
    double largest = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double c = sq_norms[j];
      double t = 0.0;
      if (c > 0.0) {
        r += X.col(j) * result.w[j];
        const double b = X.col(j).dot(r);
        if (j < u) {
          t = b / c;
        } else {
          const double pen = penalty_inflation * std::sqrt(c) / nd;
          t = bisect_coordinate(r.squaredNorm(), b, c, nd, pen);
        }
        r -= X.col(j) * t;
      }
      largest = std::max(largest, std::abs(t - result.w[j]));
      result.w[j] = t;
    }
    ++result.cycles;
    if (largest < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

double gaussian_event_rate(int trials, Index n, Index p, double delta, double sigma,
                           std::uint64_t seed) {
  if (trials < 1 || n < 1 || p < 1) throw DataError("gaussian_event_rate: bad sizes");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double threshold = std::sqrt(sigma * sigma * (2.0 * std::log(static_cast<double>(p)) + delta));
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    Matrix X = gaussian_matrix(n, p, rng);
    for (Index j = 0; j < p; ++j) X.col(j) *= sqrt_n / X.col(j).norm();
    Vector eps(n);
    for (Index i = 0; i < n; ++i) eps[i] = sigma * normal(rng);
    const double eps_max = (X.transpose() * eps).lpNorm<Eigen::Infinity>();
    if (threshold >= eps_max / sqrt_n) ++hits;
  }
  return static_cast<double>(hits) / trials;
}

nlohmann::json SuiteReport::to_json() const {
  return {{"instances", config.instances},
          {"n", config.n},
          {"p", config.p},
          {"k", config.k},
          {"seed", config.seed},
          {"noiseless_every", config.noiseless_every},
          {"accepted", accepted},
          {"attempts", attempts},
          {"noiseless", noiseless},
          {"noiseless_failures", noiseless_failures},
          {"lasso_violations", lasso_violations},
          {"spice_violations", spice_violations},
          {"worst_lasso_ratio", worst_lasso_ratio},
          {"worst_spice_ratio", worst_spice_ratio},
          {"slack", kBoundSlack},
          {"pass", pass()}};
}

SuiteReport run_bound_suite(const SuiteConfig& config) {
  if (config.k > config.p || config.n < 2 || config.instances < 0)
    throw DataError("bound suite: invalid configuration");
  SuiteReport report;
  report.config = config;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;

  while (report.accepted < config.instances && report.attempts < config.max_attempts) {
    ++report.attempts;
    const bool noiseless = config.noiseless_every > 0 && report.accepted % config.noiseless_every == 0;
    const Matrix X = gaussian_matrix(config.n, config.p, rng);

    std::vector<Index> columns(static_cast<std::size_t>(config.p));
    for (Index j = 0; j < config.p; ++j) columns[static_cast<std::size_t>(j)] = j;
    for (std::size_t i = columns.size(); i > 1; --i) std::swap(columns[i - 1], columns[rng() % i]);
    Vector w_true = Vector::Zero(config.p);
    for (Index i = 0; i < config.k; ++i) {
      const double magnitude = 0.5 + 2.5 * unit(rng);
      w_true[columns[static_cast<std::size_t>(i)]] = unit(rng) < 0.5 ? -magnitude : magnitude;
    }
    Vector y = X * w_true;
    if (!noiseless) {
      const double sigma = 0.1 + 1.9 * unit(rng);
      for (Index i = 0; i < config.n; ++i) y[i] += sigma * normal(rng);
    }

    const SparseOracleResult oracle = best_subset(X, y, config.k);
    const double n = static_cast<double>(config.n);
    const double scale = std::sqrt(n * oracle.R_star);
    const Vector varphi = X.colwise().norm().transpose() / std::sqrt(n);
    const bool spice_premise = oracle.eps_star == 0.0 || (varphi.array() * scale >= oracle.eps_star).all();
    if (!spice_premise) continue;
    const double theta = noiseless ? 0.01 + unit(rng) : 2.0 * oracle.eps_star / n * (1.0 + 3.0 * unit(rng));

    const BoundReport lasso = check_lasso_bound(X, y, config.k, theta);
    const BoundReport spice = check_spice_bound(X, y, config.k);
    ++report.accepted;
    if (!lasso.pass) ++report.lasso_violations;
    if (!spice.pass) ++report.spice_violations;
    if (lasso.bound > 0.0) report.worst_lasso_ratio = std::max(report.worst_lasso_ratio, lasso.measured / lasso.bound);
    if (spice.bound > 0.0) report.worst_spice_ratio = std::max(report.worst_spice_ratio, spice.measured / spice.bound);
    if (noiseless) {
      ++report.noiseless;
      if (oracle.eps_star != 0.0 || !lasso.pass || !spice.pass || !lasso.premise_holds || !spice.premise_holds)
        ++report.noiseless_failures;
    }
  }
  return report;
}

}  // namespace spice::verify
