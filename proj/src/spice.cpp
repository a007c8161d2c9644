#include "spice/spice.hpp"

#include <algorithm>
#include <cmath>

namespace spice {

void SpiceOptions::validate() const {
  if (cycles < 1) throw DataError("cycles per sample (L) must be >= 1");
  if (refresh_interval < 1) throw DataError("refresh interval must be >= 1");
  if (!(penalty_inflation > 0.0) || !std::isfinite(penalty_inflation))
    throw DataError("penalty inflation must be positive and finite");
}

double gaussian_inflation(Index p, double delta, double c) {
  if (p < 1 || !(delta > 0.0) || !(c > 0.0))
    throw DataError("gaussian inflation needs p >= 1, delta > 0, c > 0");
  return c * std::sqrt(2.0 * std::log(static_cast<double>(p)) + delta);
}

double objective(const SufficientStats& stats, const Vector& w, Index u, double penalty_inflation) {
  if (stats.count() == 0) throw NumericalError("objective undefined before the first sample");
  if (w.size() != stats.dim()) throw DataError("weight vector has wrong length");
  const double n = static_cast<double>(stats.count());
  const double risk = std::max(stats.residual_energy(w), 0.0) / n;
  double penalty = 0.0;
  for (Index j = u; j < w.size(); ++j)
    penalty += std::sqrt(std::max(stats.gamma()(j, j), 0.0)) * std::abs(w[j]);
  return std::sqrt(risk) + penalty_inflation * penalty / n;
}

double penalized_magnitude(double alpha, double beta, double gamma, double n,
                           double penalty_inflation) {
  const double f2 = penalty_inflation * penalty_inflation;
  if (!(beta > 0.0) || !(n > f2)) return 0.0;
  // alpha beta - gamma^2 >= 0 by Cauchy-Schwarz; rounding can make it negative.
  const double disc = f2 * std::max(alpha * beta - gamma * gamma, 0.0);
  const double dof = n - f2;
  if (!(std::sqrt(dof) * gamma > std::sqrt(disc))) return 0.0;
  return std::max(gamma / beta - std::sqrt(disc / dof) / beta, 0.0);
}

double coordinate_minimizer(const SpiceState& state, const SufficientStats& stats, Index j,
                            double penalty_inflation) {
  const double beta = stats.gamma()(j, j);
  // Column identically zero so far: the objective does not depend on w_j
  // except through the penalty.
  if (!(beta > 0.0)) return 0.0;
  const double wj = state.w[j];
  // Residual energy at the rounding level of kappa: the rows are
  // interpolated, and for n > f^2 moving w_j raises the residual term faster
  // than it can lower the penalty. The cached scalars only carry noise here.
  const double n = static_cast<double>(stats.count());
  if (n > penalty_inflation * penalty_inflation &&
      state.xi <= kInterpolationTolerance * stats.y_energy())
    return wj;
  const double correlation = state.zeta[j] + beta * wj;
  if (j < state.u) return correlation / beta;

  const double alpha = state.xi + beta * wj * wj + 2.0 * wj * state.zeta[j];
  const double magnitude = penalized_magnitude(alpha, beta, std::abs(correlation),
                                               n, penalty_inflation);
  if (magnitude == 0.0) return 0.0;
  return correlation > 0.0 ? magnitude : -magnitude;
}

double update_coordinate(SpiceState& state, const SufficientStats& stats, Index j,
                         double penalty_inflation) {
  const double w_new = coordinate_minimizer(state, stats, j, penalty_inflation);
  const double delta = state.w[j] - w_new;
  if (delta != 0.0) {
    state.xi += stats.gamma()(j, j) * delta * delta + 2.0 * delta * state.zeta[j];
    if (state.xi < 0.0) state.xi = 0.0;
    state.zeta.noalias() += stats.gamma().col(j) * delta;
    state.w[j] = w_new;
  }
  return w_new;
}

void refresh(SpiceState& state, const SufficientStats& stats) {
  const Vector gw = stats.gamma() * state.w;
  state.zeta = stats.rho() - gw;
  state.xi = stats.y_energy() + state.w.dot(gw) - 2.0 * state.w.dot(stats.rho());
  if (state.xi < 0.0) state.xi = 0.0;
}

double run_cycle(SpiceState& state, const SufficientStats& stats, double penalty_inflation) {
  double largest = 0.0;
  for (Index j = 0; j < state.w.size(); ++j) {
    const double before = state.w[j];
    update_coordinate(state, stats, j, penalty_inflation);
    largest = std::max(largest, std::abs(state.w[j] - before));
  }
  return largest;
}

SpiceModel::SpiceModel(FeatureMap features, SpiceOptions options)
    : features_(std::move(features)), options_(options), stats_(features_.dim()),
      phi_buffer_(features_.dim()) {
  options_.validate();
  const Index p = features_.dim();
  state_.w = Vector::Zero(p);
  state_.zeta = Vector::Zero(p);
  state_.u = features_.mean_width();
  state_.cycles_per_sample = options_.cycles;
}

SpiceModel::SpiceModel(FeatureMap features, SpiceOptions options, SufficientStats stats,
                       SpiceState state)
    : features_(std::move(features)), options_(options), stats_(std::move(stats)),
      state_(std::move(state)), phi_buffer_(features_.dim()) {
  options_.validate();
  const Index p = features_.dim();
  if (stats_.dim() != p || state_.w.size() != p || state_.zeta.size() != p)
    throw DataError("model dimensions disagree: feature map, statistics and weights must share p");
  if (state_.u != features_.mean_width())
    throw DataError("unpenalized prefix does not match the feature map's mean block");
  state_.cycles_per_sample = options_.cycles;
}

void SpiceModel::step(std::span<const double> x, double y) {
  features_.evaluate_into(
      x, std::span<double>(phi_buffer_.data(), static_cast<std::size_t>(phi_buffer_.size())));
  step_regressor(std::span<const double>(phi_buffer_.data(),
                                         static_cast<std::size_t>(phi_buffer_.size())),
                 y);
}

void SpiceModel::step_regressor(std::span<const double> phi, double y) {
  const bool full_refresh = options_.recompute_each_sample ||
                            (state_.update_count + 1) % options_.refresh_interval == 0;
  double residual = 0.0;
  if (!full_refresh) {
    if (phi.size() != static_cast<std::size_t>(stats_.dim()))
      throw DataError("regressor has wrong length");
    Eigen::Map<const Vector> v(phi.data(), stats_.dim());
    residual = y - v.dot(state_.w);
  }
  stats_.ingest(phi, y);
  if (full_refresh) {
    refresh(state_, stats_);
  } else {
    Eigen::Map<const Vector> v(phi.data(), stats_.dim());
    state_.xi += residual * residual;
    state_.zeta.noalias() += v * residual;
  }
  run_cycles(options_.cycles);
  ++state_.update_count;
}

void SpiceModel::run_cycles(int count) {
  const Index p = state_.w.size();
  for (int c = 0; c < count; ++c) {
    for (Index j = 0; j < p; ++j) {
      update_coordinate(state_, stats_, j, options_.penalty_inflation);
      if (observer_) observer_(state_, stats_, j);
    }
  }
}

int SpiceModel::fit_to_convergence(double tol, int max_cycles) {
  if (stats_.count() == 0) return 0;
  refresh(state_, stats_);
  const Index p = state_.w.size();
  for (int cycle = 1; cycle <= max_cycles; ++cycle) {
    double largest = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double before = state_.w[j];
      update_coordinate(state_, stats_, j, options_.penalty_inflation);
      largest = std::max(largest, std::abs(state_.w[j] - before));
      if (observer_) observer_(state_, stats_, j);
    }
    if (largest < tol) return cycle;
  }
  return max_cycles;
}

double SpiceModel::predict(std::span<const double> x) const {
  const Vector phi = features_.evaluate(x);
  return predict_regressor(std::span<const double>(phi.data(), static_cast<std::size_t>(phi.size())));
}

double SpiceModel::predict_regressor(std::span<const double> phi) const {
  if (stats_.count() == 0) throw NumericalError("model has not seen any samples");
  if (phi.size() != static_cast<std::size_t>(state_.w.size()))
    throw DataError("regressor has wrong length");
  return Eigen::Map<const Vector>(phi.data(), state_.w.size()).dot(state_.w);
}

double SpiceModel::objective() const {
  return spice::objective(stats_, state_.w, state_.u, options_.penalty_inflation);
}

Index SpiceModel::nonzero_count(double threshold) const {
  return (state_.w.array().abs() > threshold).count();
}

}  // namespace spice
