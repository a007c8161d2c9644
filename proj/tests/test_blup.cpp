#include <doctest.h>

#include <cmath>
#include <random>

#include "spice/baselines.hpp"
#include "spice/blup.hpp"
#include "spice/spice.hpp"
#include "test_util.hpp"

using namespace spice;
using namespace spice::blup;

namespace {

MomentModel random_model(Index n, Index u, Index q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> positive(0.1, 2.0);
  MomentModel m;
  m.theta0 = positive(rng);
  m.theta.resize(q);
  for (Index k = 0; k < q; ++k) m.theta[k] = positive(rng);
  m.U = testutil::gaussian(n, u, seed + 1);
  if (u > 0) m.U.col(0).setOnes();
  m.Psi = testutil::gaussian(n, q, seed + 2);
  m.y = testutil::gaussian_vector(n, seed + 3);
  return m;
}

}  // namespace

TEST_CASE("pure mean model gives the sample mean") {
  MomentModel m;
  m.theta0 = 0.7;
  m.theta = Vector(0);
  m.U = Matrix::Ones(6, 1);
  m.Psi = Matrix(6, 0);
  m.y = testutil::gaussian_vector(6, 1);
  const Vector lambda = blup_weights(m, Vector::Ones(1), Vector(0));
  CHECK(testutil::max_abs_diff(lambda, Vector::Constant(6, 1.0 / 6.0)) < 1e-14);
}

TEST_CASE("zero basis weights predict the sample mean everywhere") {
  MomentModel m = random_model(12, 1, 3, 10);
  m.theta.setZero();
  const double mean = m.y.mean();
  for (int t = 0; t < 5; ++t)
    CHECK(lc_predict(m, Vector::Ones(1), testutil::gaussian_vector(3, 20 + t)) == doctest::Approx(mean).epsilon(1e-12));
  const LrWeights w = lr_weights(m);
  CHECK(w.w1 == Vector::Zero(3));
}

TEST_CASE("LC weights satisfy the unbiasedness constraint") {
  const MomentModel m = random_model(15, 1, 3, 30);
  for (int t = 0; t < 10; ++t) {
    const Vector u_x = Vector::Ones(1);
    const Vector lambda = blup_weights(m, u_x, testutil::gaussian_vector(3, 40 + t));
    CHECK(testutil::max_abs_diff(m.U.transpose() * lambda, u_x) < 1e-10);
  }
}

TEST_CASE("LR and LC forms give the same predictions") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MomentModel m = random_model(30 + static_cast<Index>(seed), 2, 5, 100 + seed);
    const LrWeights w = lr_weights(m);
    for (int t = 0; t < 50; ++t) {
      Vector u_x = testutil::gaussian_vector(2, 1000 * seed + t);
      u_x[0] = 1.0;
      const Vector psi_x = testutil::gaussian_vector(5, 2000 * seed + t);
      const double lc = lc_predict(m, u_x, psi_x);
      CHECK(std::abs(lc - lr_predict(w, u_x, psi_x)) <= 1e-9 * std::max(1.0, std::abs(lc)));
    }
  }
}

TEST_CASE("LR weights solve the weighted ridge normal equations") {
  const MomentModel m = random_model(25, 1, 4, 200);
  const LrWeights w = lr_weights(m);
  Matrix Phi(25, 5);
  Phi << m.U, m.Psi;
  // argmin ||y - Phi w||^2 + theta0 sum_k w1_k^2 / theta_k
  Matrix system = Phi.transpose() * Phi;
  for (Index k = 0; k < 4; ++k) system(1 + k, 1 + k) += m.theta0 / m.theta[k];
  const Vector oracle = system.ldlt().solve(Phi.transpose() * m.y);
  CHECK(testutil::max_abs_diff(w.stacked(), oracle) < 1e-9);
}

TEST_CASE("unit basis weights reproduce ridge regression") {
  MomentModel m = random_model(30, 1, 6, 300);
  m.theta.setOnes();
  Matrix Phi(30, 7);
  Phi << m.U, m.Psi;
  const Vector ridge = baselines::ridge_fit(Phi, m.y, m.theta0, 1);
  CHECK(testutil::max_abs_diff(lr_weights(m).stacked(), ridge) < 1e-9);
}

TEST_CASE("predictions are invariant to a joint rescaling") {
  const MomentModel m = random_model(20, 1, 4, 400);
  const Vector u_x = Vector::Ones(1);
  const Vector psi_x = testutil::gaussian_vector(4, 401);
  for (double c : {0.1, 1.0, 10.0, 1000.0}) CHECK(scale_invariance_check(m, u_x, psi_x, c));

  // Scaling theta0 alone changes the prediction.
  MomentModel only_noise = m;
  only_noise.theta0 *= 10.0;
  CHECK(std::abs(lc_predict(m, u_x, psi_x) - lc_predict(only_noise, u_x, psi_x)) > 1e-6);
}

TEST_CASE("singular covariance is reported") {
  MomentModel m = random_model(10, 1, 3, 500);
  m.theta0 = 0.0;
  CHECK_THROWS_AS(blup_weights(m, Vector::Ones(1), Vector::Zero(3)), NumericalError);
  m.theta0 = -1.0;
  CHECK_THROWS_AS(lr_weights(m), DataError);
}

TEST_CASE("SPICE-implied hyperparameters reproduce the SPICE predictor") {
  const Matrix X = testutil::gaussian(40, 4, 600);
  Matrix Phi(40, 5);
  Phi.col(0).setOnes();
  Phi.rightCols(4) = X;
  const Vector y = (0.5 + 2.0 * X.col(0).array() - X.col(2).array()).matrix() + 0.4 * testutil::gaussian_vector(40, 601);
  SpiceModel model(FeatureMap::linear(4));
  for (Index i = 0; i < 40; ++i) {
    const Vector row = Phi.row(i).transpose();
    model.step_regressor(testutil::view(row), y[i]);
  }
  model.fit_to_convergence(1e-12, 1000000);
  const Matrix test = [&] {
    Matrix t(25, 5);
    t.col(0).setOnes();
    t.rightCols(4) = testutil::gaussian(25, 4, 602);
    return t;
  }();
  const RoundtripReport report = spice_theta_roundtrip(Phi, y, 1, model.weights(), test);
  REQUIRE_FALSE(report.skipped);
  CHECK(report.max_abs_diff < 1e-4);
  CHECK((report.theta.theta.array() >= 0.0).all());
  CHECK(report.theta.theta0 > 0.0);
}

TEST_CASE("zero penalized weights give zero basis hyperparameters") {
  const Matrix Phi = testutil::gaussian(10, 3, 700);
  const Vector y = testutil::gaussian_vector(10, 701);
  const SpiceTheta theta = spice_theta(Phi, y, 1, Vector{{0.4, 0.0, 0.0}});
  CHECK(theta.theta == Vector::Zero(2));
}

TEST_CASE("interpolating fit is skipped") {
  const Matrix Phi = testutil::gaussian(3, 3, 800);
  const Vector w{{1.0, -2.0, 0.5}};
  const RoundtripReport report = spice_theta_roundtrip(Phi, Phi * w, 0, w, Phi);
  CHECK(report.skipped);
  CHECK_FALSE(report.diagnostic.empty());
}

TEST_CASE("pseudoinverse of a rank-deficient matrix") {
  Matrix A(3, 2);
  A << 1, 2, 2, 4, 3, 6;
  const Matrix P = pseudo_inverse(A);
  CHECK(testutil::max_abs_diff(A * P * A, A) < 1e-12);
  CHECK(testutil::max_abs_diff(P * A * P, P) < 1e-12);
  CHECK(pseudo_inverse(Matrix(0, 0)).size() == 0);
}
