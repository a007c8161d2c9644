#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "spice/common.hpp"
#include "spice/features.hpp"
#include "spice/stats.hpp"

namespace spice {

struct SpiceOptions {
  /// L: full coordinate cycles run after each new sample.
  int cycles = 3;
  /// When true (default), xi and zeta are recomputed from the statistics at
  /// every sample, as the basic online algorithm does. When false they are
  /// carried across samples with an O(p) update and recomputed every
  /// `refresh_interval` samples.
  bool recompute_each_sample = true;
  int refresh_interval = 100;
  /// Multiplies every penalty weight varphi_j. 1 gives the plain SPICE
  /// objective; see gaussian_inflation() for the high-probability variant.
  double penalty_inflation = 1.0;

  void validate() const;
};

/// c * sqrt(2 ln p + delta): penalty inflation that makes the sparse-oracle
/// bound hold with high probability under i.i.d. Gaussian errors.
double gaussian_inflation(Index p, double delta, double c);

/// Current iterate of the cyclic solver plus the cached residual scalars
///   xi = ||y - Phi w||^2,  zeta = rho - Gamma w.
struct SpiceState {
  Vector w;
  double xi = 0.0;
  Vector zeta;
  Index u = 0;
  int cycles_per_sample = 3;
  std::int64_t update_count = 0;
};

/// V_n(w) = sqrt(R(w)) + (1/n) sum_{j >= u} ||phi~_j|| |w_j| (times the
/// penalty inflation), with R(w) = max(||y - Phi w||^2, 0) / n.
/// Throws NumericalError when n = 0.
double objective(const SufficientStats& stats, const Vector& w, Index u,
                 double penalty_inflation = 1.0);

/// Minimizer over r >= 0 of sqrt(alpha + beta r^2 - 2 gamma r) + f sqrt(beta/n) r,
/// i.e. the magnitude of a penalized coordinate update. Returns 0 when the
/// threshold test fails (ties included) or when n <= f^2.
double penalized_magnitude(double alpha, double beta, double gamma, double n,
                           double penalty_inflation = 1.0);

/// Cached residual energy at or below this multiple of kappa counts as an
/// exact interpolation; coordinate updates then keep the current value.
inline constexpr double kInterpolationTolerance = 1e-14;

/// Exact minimizer of the objective along coordinate j with the others held
/// at state.w. Does not modify the state.
double coordinate_minimizer(const SpiceState& state, const SufficientStats& stats, Index j,
                            double penalty_inflation = 1.0);

/// Moves coordinate j to its minimizer and updates xi (first) then zeta.
/// Returns the new w_j.
double update_coordinate(SpiceState& state, const SufficientStats& stats, Index j,
                         double penalty_inflation = 1.0);

/// Recomputes xi and zeta from (Gamma, rho, kappa, w).
void refresh(SpiceState& state, const SufficientStats& stats);

/// One ascending sweep over all coordinates. Returns the largest |change|.
double run_cycle(SpiceState& state, const SufficientStats& stats, double penalty_inflation = 1.0);

/// The online SPICE predictor: feature map + sufficient statistics + solver
/// state. A model is used from one thread at a time.
class SpiceModel {
 public:
  /// Called after every coordinate update with the index just updated.
  using UpdateObserver =
      std::function<void(const SpiceState&, const SufficientStats&, Index j)>;

  explicit SpiceModel(FeatureMap features, SpiceOptions options = {});
  /// Restores a model mid-stream (used by persistence).
  SpiceModel(FeatureMap features, SpiceOptions options, SufficientStats stats, SpiceState state);

  /// Ingests (phi(x), y) and runs L cycles.
  void step(std::span<const double> x, double y);
  /// Same as step() for a regressor that has already been evaluated.
  void step_regressor(std::span<const double> phi, double y);

  /// Cycles at the current n until the largest coordinate change falls below
  /// `tol` or `max_cycles` is reached. Returns the number of cycles run.
  int fit_to_convergence(double tol = 1e-10, int max_cycles = 100000);

  /// phi(x)^T w. Throws NumericalError before the first sample.
  double predict(std::span<const double> x) const;
  double predict_regressor(std::span<const double> phi) const;

  /// Current value of the objective at the current iterate.
  double objective() const;
  Index nonzero_count(double threshold = 0.0) const;

  const FeatureMap& features() const { return features_; }
  const SufficientStats& stats() const { return stats_; }
  const SpiceState& state() const { return state_; }
  const SpiceOptions& options() const { return options_; }
  const Vector& weights() const { return state_.w; }

  void set_observer(UpdateObserver observer) { observer_ = std::move(observer); }

 private:
  void run_cycles(int count);

  FeatureMap features_;
  SpiceOptions options_;
  SufficientStats stats_;
  SpiceState state_;
  Vector phi_buffer_;
  UpdateObserver observer_;
};

}  // namespace spice
