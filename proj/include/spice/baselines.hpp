#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spice/common.hpp"
#include "spice/stats.hpp"

namespace spice::baselines {

// ---------------------------------------------------------------------------
// Ridge
// ---------------------------------------------------------------------------

/// argmin_w R(w) + (penalty/n) ||w_{>=u}||^2, solved from the normal
/// equations (Gamma + penalty D) w = rho with D = diag(0_u, I_q).
/// Throws NumericalError if the system is singular (penalty 0 and
/// rank-deficient Phi).
Vector ridge_fit(const SufficientStats& stats, double penalty, Index u);
Vector ridge_fit(const Matrix& Phi, const Vector& y, double penalty, Index u);

// ---------------------------------------------------------------------------
// LASSO
// ---------------------------------------------------------------------------

struct LassoOptions {
  double tol = 1e-8;       ///< stop when a full sweep moves no weight by more
  int max_cycles = 10000;  ///< sweeps, counting active-set sweeps
  /// Called with the weights after every sweep.
  std::function<void(const Vector&)> on_cycle;
};

struct LassoResult {
  Vector w;
  int cycles = 0;
  bool converged = false;
};

/// R(w) + theta ||w_{>=u}||_1.
double lasso_objective(const SufficientStats& stats, const Vector& w, double theta, Index u);

/// Cyclic soft-thresholding on the Gram form of the LASSO objective, with
/// active-set sweeps between full sweeps. `warm_start` may be null.
LassoResult lasso_fit(const SufficientStats& stats, double theta, Index u,
                      const LassoOptions& options = {}, const Vector* warm_start = nullptr);
Vector lasso_fit(const Matrix& Phi, const Vector& y, double theta, Index u,
                 const LassoOptions& options = {});

/// Smallest theta for which every penalized weight is zero:
/// 2 ||Phi_pen^T (y - U w0)||_inf / n with w0 the least-squares mean block.
double lasso_theta_max(const SufficientStats& stats, Index u);

// ---------------------------------------------------------------------------
// K-fold cross-validation
// ---------------------------------------------------------------------------

struct CvConfig {
  int folds = 10;
  /// Ascending hyperparameter values; larger means more regularization.
  /// Equal neighbours are allowed.
  std::vector<double> grid;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CvResult {
  double best = 0.0;
  std::size_t best_index = 0;
  std::vector<double> grid;
  /// sum_k (n_k / n) * mean squared held-out error of fold k.
  std::vector<double> risks;
};

/// Fits one weight vector per grid value from training statistics.
using PathFitter =
    std::function<std::vector<Vector>(const SufficientStats& train, const std::vector<double>& grid)>;

PathFitter ridge_path(Index u);
/// Warm-starts from the largest value down to the smallest.
PathFitter lasso_path(Index u, LassoOptions options = {});

/// Deterministic partition of 0..n-1 into `folds` groups whose sizes differ by
/// at most one (the first n % folds groups are larger).
std::vector<std::vector<Index>> fold_partition(Index n, int folds, std::uint64_t seed);

/// Grid point minimizing the K-fold risk estimate; ties go to the larger
/// (later) grid value. Throws DataError when n < K.
CvResult cv_select(const Matrix& Phi, const Vector& y, const CvConfig& config,
                   const PathFitter& fitter);

/// `count` log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

/// [1e-4, 1e4] * tr(Gamma) / p.
std::vector<double> default_ridge_grid(const SufficientStats& stats, int count = 10);
/// [1e-3, 1] * lasso_theta_max.
std::vector<double> default_lasso_grid(const SufficientStats& stats, Index u, int count = 10);

struct CvFit {
  Vector w;
  CvResult cv;
};

/// Cross-validates over the default grid, then refits on all the data.
CvFit ridge_cv(const Matrix& Phi, const Vector& y, Index u, int folds, std::uint64_t seed,
               int grid_size = 10);
CvFit lasso_cv(const Matrix& Phi, const Vector& y, Index u, int folds, std::uint64_t seed,
               int grid_size = 10, const LassoOptions& options = {});

}  // namespace spice::baselines
