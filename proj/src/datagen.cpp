#include "spice/datagen.hpp"

#include <cmath>
#include <random>

namespace spice::datagen {

std::string to_string(MixingKind kind) {
  switch (kind) {
    case MixingKind::Gaussian: return "gaussian";
    case MixingKind::Orthonormal: return "orthonormal";
    case MixingKind::UnitDiagonal: return "unit-diagonal";
  }
  return "gaussian";
}

MixingKind parse_mixing_kind(std::string_view text) {
  if (text == "gaussian") return MixingKind::Gaussian;
  if (text == "orthonormal") return MixingKind::Orthonormal;
  if (text == "unit-diagonal") return MixingKind::UnitDiagonal;
  throw DataError("unknown mixing kind '" + std::string(text) + "'");
}

void SparseStudentTConfig::validate() const {
  if (d < 1) throw DataError("datagen: d must be positive");
  if (!(nu > 2.0)) throw DataError("datagen: Student-t degrees of freedom must exceed 2");
  if (!(noise_variance >= 0.0)) throw DataError("datagen: noise variance must be nonnegative");
  if (rank < 0 || rank > d) throw DataError("datagen: rank must lie in [0, d]");
  if (resolved_rank() < 1) throw DataError("datagen: resolved rank is zero");
  for (int j : support)
    if (j < 0 || j >= d) throw DataError("datagen: support index out of range");
}

nlohmann::json SparseStudentTConfig::to_json() const {
  return {{"d", d},           {"support", support}, {"coefficient", coefficient},
          {"intercept", intercept}, {"noise_variance", noise_variance},
          {"nu", nu},         {"rank", resolved_rank()}, {"mixing", to_string(mixing)},
          {"seed", seed}};
}

SparseStudentTConfig SparseStudentTConfig::from_json(const nlohmann::json& j) {
  SparseStudentTConfig c;
  c.d = j.value("d", c.d);
  c.support = j.value("support", c.support);
  c.coefficient = j.value("coefficient", c.coefficient);
  c.intercept = j.value("intercept", c.intercept);
  c.noise_variance = j.value("noise_variance", c.noise_variance);
  c.nu = j.value("nu", c.nu);
  c.rank = j.value("rank", c.rank);
  c.seed = j.value("seed", c.seed);
  if (j.contains("mixing")) c.mixing = parse_mixing_kind(j.at("mixing").get<std::string>());
  c.validate();
  return c;
}

SparseStudentTGenerator::SparseStudentTGenerator(SparseStudentTConfig config)
    : config_(std::move(config)) {
  config_.validate();
  const int d = config_.d, r = config_.resolved_rank();
  std::mt19937_64 rng(derive_seed(config_.seed, {0x6d6978ULL}));
  std::normal_distribution<double> normal;
  mixing_.resize(d, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < d; ++i) mixing_(i, j) = normal(rng);
  switch (config_.mixing) {
    case MixingKind::Gaussian:
      mixing_ *= std::sqrt(static_cast<double>(d)) / mixing_.norm();
      break;
    case MixingKind::Orthonormal: {
      const Matrix q = mixing_.householderQr().householderQ() * Matrix::Identity(d, r);
      mixing_ = q * std::sqrt(static_cast<double>(d) / r);
      break;
    }
    case MixingKind::UnitDiagonal:
      mixing_ = mixing_.rowwise().normalized().eval();
      break;
  }

  beta_ = Vector::Zero(d);
  for (int j : config_.support) beta_[j] += config_.coefficient;
}

double SparseStudentTGenerator::noise_scale() const {
  return std::sqrt(config_.noise_variance * (config_.nu - 2.0) / config_.nu);
}

Dataset SparseStudentTGenerator::sample(Index n, std::uint64_t seed) const {
  if (n < 1) throw DataError("datagen: n must be at least 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::student_t_distribution<double> student(config_.nu);
  const Index r = mixing_.cols();

  Matrix Z(r, n);
  Vector noise(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < r; ++k) Z(k, i) = normal(rng);
    noise[i] = student(rng);
  }
  Dataset out;
  out.X = (mixing_ * Z).transpose();
  out.y = (out.X * beta_).array() + config_.intercept;
  out.y += noise_scale() * noise;
  return out;
}

double SparseStudentTGenerator::population_risk(double b, const Vector& w) const {
  if (w.size() != beta_.size()) throw DataError("population_risk: weight length differs from d");
  const double offset = config_.intercept - b;
  return config_.noise_variance + offset * offset + (mixing_.transpose() * (beta_ - w)).squaredNorm();
}

}  // namespace spice::datagen
