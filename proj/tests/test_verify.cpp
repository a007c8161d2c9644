#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spice/spice.hpp"
#include "spice/stats.hpp"
#include "spice/verify.hpp"
#include "test_util.hpp"

using namespace spice;
using namespace spice::verify;

namespace {

// Brute force in reverse enumeration order with plain normal equations.
double brute_force_risk(const Matrix& X, const Vector& y, Index k) {
  const Index p = X.cols();
  double best = y.squaredNorm();
  for (Index mask = (Index{1} << p) - 1; mask > 0; --mask) {
    std::vector<Index> cols;
    for (Index j = p - 1; j >= 0; --j)
      if (mask & (Index{1} << j)) cols.push_back(j);
    if (static_cast<Index>(cols.size()) > k) continue;
    Matrix sub(X.rows(), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Index>(c)) = X.col(cols[c]);
    const Vector w = (sub.transpose() * sub).ldlt().solve(sub.transpose() * y);
    best = std::min(best, (y - sub * w).squaredNorm());
  }
  return best / static_cast<double>(X.rows());
}

}  // namespace

TEST_CASE("best subset finds an exact single column") {
  const Matrix X = testutil::gaussian(20, 6, 1);
  const Vector y = 2.5 * X.col(3);
  const auto result = best_subset(X, y, 2);
  CHECK(result.support == std::vector<Index>{3});
  CHECK(result.w_star[3] == doctest::Approx(2.5));
  CHECK(result.R_star == 0.0);
  CHECK(result.eps_star == 0.0);
}

TEST_CASE("best subset with k = p is least squares") {
  const Matrix X = testutil::gaussian(25, 3, 2);
  const Vector y = testutil::gaussian_vector(25, 3);
  const auto result = best_subset(X, y, 3);
  const Vector ls = X.colPivHouseholderQr().solve(y);
  CHECK(testutil::max_abs_diff(result.w_star, ls) < 1e-10);
  CHECK(result.support.size() == 3);
  // Least-squares residuals are orthogonal to every column.
  CHECK(result.eps_star < 1e-10);
}

TEST_CASE("best subset agrees with an independent enumeration") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix X = testutil::gaussian(15, 7, 100 + seed);
    const Vector y = testutil::gaussian_vector(15, 200 + seed);
    const auto result = best_subset(X, y, 2);
    CHECK(result.R_star == doctest::Approx(brute_force_risk(X, y, 2)).epsilon(1e-10));
    CHECK(result.R_star == doctest::Approx((y - X * result.w_star).squaredNorm() / 15.0));
    CHECK(result.eps_star ==
          doctest::Approx((X.transpose() * result.residuals).lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("best subset is invariant to column order") {
  const Matrix X = testutil::gaussian(30, 6, 4);
  const Vector y = 1.5 * X.col(1) - 2.0 * X.col(4) + 0.2 * testutil::gaussian_vector(30, 5);
  const auto base = best_subset(X, y, 2);
  std::vector<Index> perm{5, 3, 1, 0, 4, 2};
  Matrix Xp(30, 6);
  for (Index j = 0; j < 6; ++j) Xp.col(j) = X.col(perm[static_cast<std::size_t>(j)]);
  const auto permuted = best_subset(Xp, y, 2);
  CHECK(permuted.R_star == doctest::Approx(base.R_star).epsilon(1e-12));
  std::vector<Index> mapped;
  for (Index j : permuted.support) mapped.push_back(perm[static_cast<std::size_t>(j)]);
  std::sort(mapped.begin(), mapped.end());
  CHECK(mapped == base.support);
}

TEST_CASE("best subset guards") {
  const Matrix wide = testutil::gaussian(5, 17, 6);
  CHECK_THROWS_AS(best_subset(wide, testutil::gaussian_vector(5, 7), 1), DataError);
  const Matrix X = testutil::gaussian(5, 4, 8);
  CHECK_THROWS_AS(best_subset(X, testutil::gaussian_vector(5, 9), 4), DataError);
  CHECK_THROWS_AS(best_subset(X, testutil::gaussian_vector(6, 9), 1), DataError);
}

TEST_CASE("divergence") {
  const Matrix X = testutil::gaussian(10, 3, 10);
  const Vector a = testutil::gaussian_vector(3, 11);
  const Vector b = testutil::gaussian_vector(3, 12);
  CHECK(divergence(X, a, b) == doctest::Approx((X * (a - b)).squaredNorm() / 10.0));
  CHECK(divergence(X, a, a) == 0.0);
  CHECK(divergence(X, a, b) == doctest::Approx(divergence(X, b, a)));
}

TEST_CASE("noiseless instances satisfy both bounds") {
  const Matrix X = testutil::gaussian(40, 8, 13);
  Vector beta = Vector::Zero(8);
  beta[2] = 1.5;
  beta[6] = -2.0;
  const Vector y = X * beta;
  const auto lasso = check_lasso_bound(X, y, 2, 0.05);
  CHECK(lasso.premise_holds);
  CHECK(lasso.pass);
  CHECK(lasso.measured <= lasso.bound + kBoundSlack);
  const auto spice = check_spice_bound(X, y, 2);
  CHECK(spice.premise_holds);
  // R_star = 0 leaves only the (2/n) g^2 term.
  const double g = X.colwise().norm().transpose().cwiseProduct(beta.cwiseAbs()).sum() / std::sqrt(40.0);
  CHECK(spice.bound == doctest::Approx(2.0 / 40.0 * g * g));
  CHECK(spice.pass);
  CHECK(spice.measured < 1e-9);
}

TEST_CASE("tiny LASSO penalty fails the premise") {
  const Matrix X = testutil::gaussian(40, 8, 14);
  const Vector y = X.col(0) + testutil::gaussian_vector(40, 15);
  const auto report = check_lasso_bound(X, y, 1, 1e-8);
  CHECK_FALSE(report.premise_holds);
  CHECK(report.pass);
}

TEST_CASE("reference solver matches the streaming solver") {
  Matrix X(60, 6);
  X.col(0).setOnes();
  X.rightCols(5) = testutil::gaussian(60, 5, 16);
  const Vector y = (1.0 + 2.0 * X.col(2).array()).matrix() + 0.5 * testutil::gaussian_vector(60, 17);
  const ReferenceResult ref = reference_spice(X, y, 1);
  REQUIRE(ref.converged);
  const auto stats = SufficientStats::from_batch(X, y);
  SpiceState state;
  state.w = Vector::Zero(6);
  state.zeta = Vector::Zero(6);
  state.u = 1;
  refresh(state, stats);
  for (int c = 0; c < 20000; ++c)
    if (run_cycle(state, stats) < 1e-13) break;
  CHECK(testutil::max_abs_diff(state.w, ref.w) < 1e-7);
}

TEST_CASE("gaussian event rate meets its probability bound") {
  const double delta = 4.0;
  const double rate = gaussian_event_rate(4000, 50, 20, delta, 1.3, 21);
  CHECK(rate >= 1.0 - 2.0 * std::exp(-delta / 2.0));
  CHECK(rate <= 1.0);
}

TEST_CASE("small bound suite") {
  SuiteConfig config;
  config.instances = 30;
  config.seed = 5;
  const SuiteReport report = run_bound_suite(config);
  CHECK(report.accepted == 30);
  CHECK(report.noiseless == 3);
  CHECK(report.pass());
  CHECK(report.to_json().at("accepted") == 30);
}
