#include "spice/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace spice::baselines {

namespace {

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

Matrix gather_rows(const Matrix& A, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), A.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = A.row(rows[i]);
  return out;
}

Vector gather(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

void check_prefix(Index u, Index p) {
  if (u < 0 || u > p) throw DataError("unpenalized prefix length out of range");
}

}  // namespace

Vector ridge_fit(const SufficientStats& stats, double penalty, Index u) {
  const Index p = stats.dim();
  check_prefix(u, p);
  if (!(penalty >= 0.0) || !std::isfinite(penalty))
    throw DataError("ridge penalty must be finite and nonnegative");
  Matrix system = stats.gamma();
  system.diagonal().tail(p - u).array() += penalty;
  Eigen::ColPivHouseholderQR<Matrix> qr(system);
  const double scale = std::max(1.0, system.diagonal().cwiseAbs().maxCoeff());
  qr.setThreshold(1e-13 * static_cast<double>(p));
  if (qr.rank() < p || std::abs(qr.matrixQR()(p - 1, p - 1)) < 1e-300 * scale)
    throw NumericalError("ridge normal equations are singular");
  return qr.solve(stats.rho());
}

Vector ridge_fit(const Matrix& Phi, const Vector& y, double penalty, Index u) {
  return ridge_fit(SufficientStats::from_batch(Phi, y), penalty, u);
}

double lasso_objective(const SufficientStats& stats, const Vector& w, double theta, Index u) {
  const double n = static_cast<double>(std::max<std::int64_t>(stats.count(), 1));
  return stats.residual_energy(w) / n + theta * w.tail(w.size() - u).lpNorm<1>();
}

LassoResult lasso_fit(const SufficientStats& stats, double theta, Index u,
                      const LassoOptions& options, const Vector* warm_start) {
  const Index p = stats.dim();
  check_prefix(u, p);
  if (!(theta >= 0.0)) throw DataError("LASSO theta must be nonnegative");
  if (stats.count() == 0) throw DataError("LASSO needs at least one sample");

  LassoResult result;
  result.w = warm_start ? *warm_start : Vector::Zero(p);
  if (result.w.size() != p) throw DataError("warm start has wrong length");
  const Matrix& G = stats.gamma();
  Vector zeta = stats.rho() - G * result.w;
  // Coordinate minimizer of (1/n)(Gjj w^2 - 2 c w) + theta |w| is
  // S(c, n theta / 2) / Gjj.
  const double threshold = static_cast<double>(stats.count()) * theta / 2.0;

  auto update = [&](Index j) {
    const double gjj = G(j, j);
    double w_new = 0.0;
    if (gjj > 0.0) {
      const double c = zeta[j] + gjj * result.w[j];
      w_new = (j < u ? c : soft_threshold(c, threshold)) / gjj;
    }
    const double delta = w_new - result.w[j];
    if (delta != 0.0) {
      zeta.noalias() -= G.col(j) * delta;
      result.w[j] = w_new;
    }
    return std::abs(delta);
  };

  std::vector<Index> active;
  while (result.cycles < options.max_cycles) {
    double largest = 0.0;
    for (Index j = 0; j < p; ++j) largest = std::max(largest, update(j));
    ++result.cycles;
    if (options.on_cycle) options.on_cycle(result.w);
    if (largest < options.tol) {
      result.converged = true;
      break;
    }
    active.clear();
    for (Index j = 0; j < p; ++j)
      if (j < u || result.w[j] != 0.0) active.push_back(j);
    while (result.cycles < options.max_cycles) {
      double change = 0.0;
      for (Index j : active) change = std::max(change, update(j));
      ++result.cycles;
      if (options.on_cycle) options.on_cycle(result.w);
      if (change < options.tol) break;
    }
  }
  return result;
}

Vector lasso_fit(const Matrix& Phi, const Vector& y, double theta, Index u,
                 const LassoOptions& options) {
  return lasso_fit(SufficientStats::from_batch(Phi, y), theta, u, options).w;
}

double lasso_theta_max(const SufficientStats& stats, Index u) {
  const Index p = stats.dim();
  check_prefix(u, p);
  if (stats.count() == 0 || u == p) return 0.0;
  const Matrix& G = stats.gamma();
  Vector correlation = stats.rho().tail(p - u);
  if (u > 0) {
    const Vector w0 = G.topLeftCorner(u, u).completeOrthogonalDecomposition().solve(stats.rho().head(u));
    correlation -= G.bottomLeftCorner(p - u, u) * w0;
  }
  return 2.0 * correlation.lpNorm<Eigen::Infinity>() / static_cast<double>(stats.count());
}

void CvConfig::validate() const {
  if (folds < 2) throw DataError("cross-validation needs K >= 2 folds");
  if (grid.empty()) throw DataError("cross-validation grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]))
      throw DataError("grid values must be finite and nonnegative");
    if (i > 0 && grid[i] < grid[i - 1]) throw DataError("grid must be ascending");
  }
}

PathFitter ridge_path(Index u) {
  return [u](const SufficientStats& train, const std::vector<double>& grid) {
    std::vector<Vector> out;
    out.reserve(grid.size());
    for (double penalty : grid) out.push_back(ridge_fit(train, penalty, u));
    return out;
  };
}

PathFitter lasso_path(Index u, LassoOptions options) {
  return [u, options](const SufficientStats& train, const std::vector<double>& grid) {
    std::vector<Vector> out(grid.size());
    Vector warm = Vector::Zero(train.dim());
    for (std::size_t i = grid.size(); i-- > 0;) {
      if (i + 1 < grid.size() && grid[i] == grid[i + 1]) {
        out[i] = out[i + 1];
        continue;
      }
      out[i] = lasso_fit(train, grid[i], u, options, &warm).w;
      warm = out[i];
    }
    return out;
  };
}

std::vector<std::vector<Index>> fold_partition(Index n, int folds, std::uint64_t seed) {
  if (folds < 1) throw DataError("need at least one fold");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  // Fisher-Yates with a plain modulo draw keeps the partition identical
  // across standard libraries.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  const Index base = n / folds;
  const Index extra = n % folds;
  Index pos = 0;
  for (Index k = 0; k < folds; ++k) {
    const Index size = base + (k < extra ? 1 : 0);
    auto& fold = out[static_cast<std::size_t>(k)];
    fold.assign(order.begin() + pos, order.begin() + pos + size);
    std::sort(fold.begin(), fold.end());
    pos += size;
  }
  return out;
}

CvResult cv_select(const Matrix& Phi, const Vector& y, const CvConfig& config,
                   const PathFitter& fitter) {
  config.validate();
  const Index n = Phi.rows();
  if (y.size() != n) throw DataError("regressor rows and targets differ in length");
  if (n < config.folds)
    throw DataError("cross-validation needs n >= K (n = " + std::to_string(n) +
                    ", K = " + std::to_string(config.folds) + ")");

  CvResult result;
  result.grid = config.grid;
  result.risks.assign(config.grid.size(), 0.0);
  const auto folds = fold_partition(n, config.folds, config.seed);
  std::vector<char> held(static_cast<std::size_t>(n));
  for (const auto& fold : folds) {
    std::fill(held.begin(), held.end(), 0);
    for (Index i : fold) held[static_cast<std::size_t>(i)] = 1;
    std::vector<Index> train;
    train.reserve(static_cast<std::size_t>(n) - fold.size());
    for (Index i = 0; i < n; ++i)
      if (!held[static_cast<std::size_t>(i)]) train.push_back(i);

    const SufficientStats stats = SufficientStats::from_batch(gather_rows(Phi, train), gather(y, train));
    const std::vector<Vector> weights = fitter(stats, config.grid);
    const Matrix test = gather_rows(Phi, fold);
    const Vector target = gather(y, fold);
    for (std::size_t g = 0; g < weights.size(); ++g)
      result.risks[g] += (target - test * weights[g]).squaredNorm();
  }
  for (double& r : result.risks) r /= static_cast<double>(n);

  result.best_index = 0;
  for (std::size_t g = 1; g < result.risks.size(); ++g)
    if (result.risks[g] <= result.risks[result.best_index]) result.best_index = g;
  result.best = result.grid[result.best_index];
  return result;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw DataError("invalid log grid bounds");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> default_ridge_grid(const SufficientStats& stats, int count) {
  double scale = stats.gamma().trace() / static_cast<double>(std::max<Index>(stats.dim(), 1));
  if (!(scale > 0.0)) scale = 1.0;
  return log_grid(1e-4 * scale, 1e4 * scale, count);
}

std::vector<double> default_lasso_grid(const SufficientStats& stats, Index u, int count) {
  double top = lasso_theta_max(stats, u);
  if (!(top > 0.0)) top = 1.0;
  return log_grid(1e-3 * top, top, count);
}

CvFit ridge_cv(const Matrix& Phi, const Vector& y, Index u, int folds, std::uint64_t seed,
               int grid_size) {
  const SufficientStats all = SufficientStats::from_batch(Phi, y);
  CvConfig config{folds, default_ridge_grid(all, grid_size), seed};
  CvFit fit;
  fit.cv = cv_select(Phi, y, config, ridge_path(u));
  fit.w = ridge_fit(all, fit.cv.best, u);
  return fit;
}

CvFit lasso_cv(const Matrix& Phi, const Vector& y, Index u, int folds, std::uint64_t seed,
               int grid_size, const LassoOptions& options) {
  const SufficientStats all = SufficientStats::from_batch(Phi, y);
  CvConfig config{folds, default_lasso_grid(all, u, grid_size), seed};
  CvFit fit;
  fit.cv = cv_select(Phi, y, config, lasso_path(u, options));
  fit.w = lasso_fit(all, fit.cv.best, u, options).w;
  return fit;
}

}  // namespace spice::baselines
