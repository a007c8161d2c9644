#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "spice/common.hpp"

namespace spice::verify {

/// Best k-sparse least-squares fit, found by exhaustive enumeration.
struct SparseOracleResult {
  std::vector<Index> support;  ///< ascending
  Vector w_star;               ///< zeros off the support
  double R_star = 0.0;         ///< (1/n) ||y - X w_star||^2
  double eps_star = 0.0;       ///< max_j |eps^T x_j| over all columns
  Vector residuals;            ///< eps = y - X w_star
};

inline constexpr Index kMaxSubsetColumns = 16;
inline constexpr Index kMaxSubsetSize = 3;

/// Enumerates every support of size <= k in order of size, then
/// lexicographically, and solves least squares on each (minimum-norm on
/// rank-deficient supports). A later support replaces the incumbent only if
/// its risk is lower by more than a relative 1e-12, so ties keep the
/// smallest support. Throws DataError when p > 16 or k > 3.
SparseOracleResult best_subset(const Matrix& X, const Vector& y, Index k);

/// (1/n) ||X (w_a - w_b)||^2.
double divergence(const Matrix& X, const Vector& w_a, const Vector& w_b);

struct BoundReport {
  bool premise_holds = false;
  double bound = 0.0;
  double measured = 0.0;
  bool pass = true;  ///< vacuously true when the premise fails
  double eps_star = 0.0;
  double R_star = 0.0;
  Vector w_fit;
  std::vector<Index> support;

  nlohmann::json to_json() const;
};

inline constexpr double kBoundSlack = 1e-9;

/// LASSO (all columns penalized) against the k-sparse oracle. Premise:
/// theta >= 2 eps_star / n. Bound: divergence <= 2 theta ||w_star||_1.
BoundReport check_lasso_bound(const Matrix& X, const Vector& y, Index k, double theta);

/// SPICE (u = 0) against the k-sparse oracle, with penalty weights
/// varphi_j = f ||x_j|| / sqrt(n). Premise: varphi_j sqrt(n R_star) >= eps_star
/// for every j. Bound, with g = ||varphi . w_star||_1:
///   divergence <= (2/n) g^2 + 4 sqrt(R_star / n) g.
BoundReport check_spice_bound(const Matrix& X, const Vector& y, Index k,
                              double penalty_inflation = 1.0);

struct ReferenceResult {
  Vector w;
  int cycles = 0;
  bool converged = false;
};

/// Batch minimizer of the SPICE objective working on X and y directly.
/// Each coordinate subproblem is solved by bisection on its derivative; the
/// residual vector is rebuilt from scratch at the start of every cycle.
/// Stops when a cycle moves no weight by more than `tol`.
ReferenceResult reference_spice(const Matrix& X, const Vector& y, Index u,
                                double penalty_inflation = 1.0, double tol = 1e-10,
                                int max_cycles = 1000000);

/// Fraction of `trials` in which sqrt(sigma^2 (2 ln p + delta)) >= eps_max / sqrt(n)
/// for i.i.d. N(0, sigma^2) errors and p columns rescaled to ||x_j||^2 = n.
double gaussian_event_rate(int trials, Index n, Index p, double delta, double sigma,
                           std::uint64_t seed);

struct SuiteConfig {
  int instances = 500;  ///< accepted instances (premises of both checks hold)
  Index n = 40;
  Index p = 8;
  Index k = 2;
  /// Every this-many instances is generated without noise (eps_star = 0).
  int noiseless_every = 10;
  std::uint64_t seed = 1;
  int max_attempts = 1000000;
};

struct SuiteReport {
  SuiteConfig config;
  int accepted = 0;
  int attempts = 0;
  int noiseless = 0;
  int noiseless_failures = 0;
  int lasso_violations = 0;
  int spice_violations = 0;
  double worst_lasso_ratio = 0.0;  ///< max measured / bound
  double worst_spice_ratio = 0.0;

  bool pass() const {
    return accepted == config.instances && lasso_violations == 0 && spice_violations == 0 &&
           noiseless_failures == 0;
  }
  nlohmann::json to_json() const;
};

/// Draws random tiny instances, keeps those where both premises hold, and
/// counts bound violations.
SuiteReport run_bound_suite(const SuiteConfig& config);

}  // namespace spice::verify
