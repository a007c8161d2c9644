#include <doctest.h>

#include <cmath>
#include <cstring>

#include "spice/datagen.hpp"

using namespace spice;
using namespace spice::datagen;

TEST_CASE("noise multiplier") {
  SparseStudentTGenerator gen(SparseStudentTConfig{});
  CHECK(gen.noise_scale() == doctest::Approx(1.1547005383792515).epsilon(1e-15));
}

TEST_CASE("mixing matrices have trace d") {
  for (MixingKind kind : {MixingKind::Gaussian, MixingKind::Orthonormal, MixingKind::UnitDiagonal}) {
    SparseStudentTConfig config;
    config.mixing = kind;
    config.seed = 4;
    SparseStudentTGenerator gen(config);
    CHECK(gen.mixing().rows() == 100);
    CHECK(gen.mixing().cols() == 50);
    CHECK(gen.mixing().squaredNorm() == doctest::Approx(100.0).epsilon(1e-12));
  }
  SparseStudentTConfig config;
  config.mixing = MixingKind::UnitDiagonal;
  SparseStudentTGenerator gen(config);
  CHECK((gen.mixing().rowwise().squaredNorm().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(parse_mixing_kind("orthonormal") == MixingKind::Orthonormal);
  CHECK(to_string(MixingKind::UnitDiagonal) == "unit-diagonal");
  CHECK_THROWS_AS(parse_mixing_kind("other"), DataError);
}

TEST_CASE("sample covariance has rank d/2") {
  SparseStudentTGenerator gen(SparseStudentTConfig{});
  const Dataset data = gen.sample(1000, 3);
  const Matrix centered = data.X.rowwise() - data.X.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.transpose() * centered / 1000.0);
  const Vector& values = eig.eigenvalues();
  const double top = values.maxCoeff();
  int rank = 0;
  for (Index i = 0; i < values.size(); ++i)
    if (values[i] > 1e-8 * top) ++rank;
  CHECK(rank >= 48);
  CHECK(rank <= 52);
}

TEST_CASE("sampling is deterministic") {
  SparseStudentTGenerator a(SparseStudentTConfig{});
  SparseStudentTGenerator b(SparseStudentTConfig{});
  const Dataset x = a.sample(20, 9), y = b.sample(20, 9);
  CHECK(std::memcmp(x.X.data(), y.X.data(), sizeof(double) * static_cast<std::size_t>(x.X.size())) == 0);
  CHECK(std::memcmp(x.y.data(), y.y.data(), sizeof(double) * 20) == 0);
  CHECK(a.sample(20, 10).y != x.y);
}

TEST_CASE("noise variance") {
  SparseStudentTConfig config;
  config.d = 4;
  config.support = {1};
  config.coefficient = 0.0;
  config.intercept = 0.0;
  SparseStudentTGenerator gen(config);
  const Dataset data = gen.sample(100000, 5);
  CHECK(data.y.squaredNorm() / 100000.0 == doctest::Approx(4.0).epsilon(0.05));
  CHECK(std::abs(data.y.mean()) < 0.05);
}

TEST_CASE("degrees of freedom must exceed two") {
  SparseStudentTConfig config;
  config.nu = 2.0;
  CHECK_THROWS_AS(SparseStudentTGenerator{config}, DataError);
  config.nu = 3.0;
  config.support = {100};
  CHECK_THROWS_AS(SparseStudentTGenerator{config}, DataError);
}

TEST_CASE("config json round trip") {
  SparseStudentTConfig config;
  config.mixing = MixingKind::Orthonormal;
  config.seed = 17;
  const auto back = SparseStudentTConfig::from_json(config.to_json());
  CHECK(back.to_json() == config.to_json());
  CHECK(back.resolved_rank() == 50);
}

TEST_CASE("regression recovers the mean function") {
  for (int full_rank = 0; full_rank < 2; ++full_rank) {
    SparseStudentTConfig config;
    config.d = 20;
    config.support = {0, 9};
    config.rank = full_rank ? 20 : 10;
    // Orthonormal mixing keeps the full-rank design well conditioned.
    if (full_rank) config.mixing = MixingKind::Orthonormal;
    SparseStudentTGenerator gen(config);
    const Dataset data = gen.sample(100000, 8);
    Matrix design(100000, 21);
    design.col(0).setOnes();
    design.rightCols(20) = data.X;
    const Vector w = design.completeOrthogonalDecomposition().solve(data.y);
    CHECK(w[0] == doctest::Approx(1.0).epsilon(0.03));
    // Only the projection onto the input span is identifiable.
    const Vector diff = gen.mixing().transpose() * (w.tail(20) - gen.coefficients());
    CHECK(diff.norm() < 0.05 * (gen.mixing().transpose() * gen.coefficients()).norm());
    if (full_rank) CHECK((w.tail(20) - gen.coefficients()).lpNorm<Eigen::Infinity>() < 0.1);
  }
}

TEST_CASE("population risk") {
  SparseStudentTGenerator gen(SparseStudentTConfig{});
  CHECK(gen.population_risk(1.0, gen.coefficients()) == doctest::Approx(4.0));
  CHECK(gen.population_risk(0.0, gen.coefficients()) == doctest::Approx(5.0));
  const Vector zero = Vector::Zero(100);
  const double risk = gen.population_risk(1.0, zero);
  const Dataset data = gen.sample(200000, 12);
  const double empirical = (data.y.array() - 1.0).square().mean();
  CHECK(empirical == doctest::Approx(risk).epsilon(0.03));
}
