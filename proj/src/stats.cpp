#include "spice/stats.hpp"

#include <cmath>

namespace spice {

SufficientStats::SufficientStats(Index p)
    : gamma_(Matrix::Zero(p, p)), rho_(Vector::Zero(p)) {}

SufficientStats::SufficientStats(Matrix gamma, Vector rho, double y_energy, std::int64_t count)
    : gamma_(std::move(gamma)), rho_(std::move(rho)), y_energy_(y_energy), count_(count) {
  if (gamma_.rows() != gamma_.cols() || gamma_.rows() != rho_.size())
    throw DataError("sufficient statistics: Gamma must be p x p and rho length p");
  if (count_ < 0) throw DataError("sufficient statistics: negative sample count");
  if (!(y_energy_ >= 0.0) || !std::isfinite(y_energy_))
    throw DataError("sufficient statistics: kappa must be finite and nonnegative");
  if (!gamma_.allFinite() || !rho_.allFinite())
    throw DataError("sufficient statistics: non-finite entries");
  const double scale = std::max(1.0, gamma_.cwiseAbs().maxCoeff());
  if ((gamma_ - gamma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DataError("sufficient statistics: Gamma is not symmetric");
}

SufficientStats SufficientStats::from_batch(const Matrix& Phi, const Vector& y) {
  if (Phi.rows() != y.size()) throw DataError("regressor rows and targets differ in length");
  if (!Phi.allFinite() || !y.allFinite()) throw DataError("non-finite regressor or target");
  SufficientStats s(Phi.cols());
  s.gamma_.noalias() = Phi.transpose() * Phi;
  // GEMM may round the two triangles differently; keep Gamma exactly symmetric.
  s.gamma_ = 0.5 * (s.gamma_ + s.gamma_.transpose()).eval();
  s.rho_.noalias() = Phi.transpose() * y;
  s.y_energy_ = y.squaredNorm();
  s.count_ = Phi.rows();
  return s;
}

void SufficientStats::ingest(std::span<const double> phi, double y) {
  if (phi.size() != static_cast<std::size_t>(dim()))
    throw DataError("regressor has length " + std::to_string(phi.size()) + ", expected " +
                    std::to_string(dim()));
  if (!std::isfinite(y)) throw DataError("non-finite target");
  Eigen::Map<const Vector> v(phi.data(), dim());
  if (!v.allFinite()) throw DataError("non-finite regressor");
  // Products commute exactly in IEEE arithmetic, so Gamma stays symmetric.
  gamma_.noalias() += v * v.transpose();
  rho_.noalias() += v * y;
  y_energy_ += y * y;
  ++count_;
}

Vector SufficientStats::column_norms() const {
  return gamma_.diagonal().cwiseMax(0.0).cwiseSqrt();
}

double SufficientStats::residual_energy(const Vector& w) const {
  return y_energy_ + w.dot(gamma_ * w) - 2.0 * w.dot(rho_);
}

SufficientStats& SufficientStats::operator+=(const SufficientStats& other) {
  if (other.dim() != dim()) throw DataError("cannot merge statistics of different dimension");
  gamma_ += other.gamma_;
  rho_ += other.rho_;
  y_energy_ += other.y_energy_;
  count_ += other.count_;
  return *this;
}

}  // namespace spice
