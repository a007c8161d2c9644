#pragma once

#include <cstdint>
#include <span>

#include "spice/common.hpp"

namespace spice {

/// Fixed-size streaming summary of (Phi, y):
///   Gamma = Phi^T Phi (p x p, stored full),  rho = Phi^T y,  kappa = y^T y.
///
/// Single writer; readers may inspect between ingests.
class SufficientStats {
 public:
  explicit SufficientStats(Index p = 0);
  /// Restores a summary from stored fields. Validates shapes and symmetry.
  SufficientStats(Matrix gamma, Vector rho, double y_energy, std::int64_t count);

  /// Batch summary of an n x p regressor matrix and its targets.
  static SufficientStats from_batch(const Matrix& Phi, const Vector& y);

  /// Gamma += phi phi^T, rho += phi y, kappa += y^2, n += 1.
  void ingest(std::span<const double> phi, double y);
  void ingest(const Vector& phi, double y) {
    ingest(std::span<const double>(phi.data(), static_cast<std::size_t>(phi.size())), y);
  }

  Index dim() const { return rho_.size(); }
  std::int64_t count() const { return count_; }
  const Matrix& gamma() const { return gamma_; }
  const Vector& rho() const { return rho_; }
  double y_energy() const { return y_energy_; }

  /// ||phi~_j||_2 = sqrt(Gamma_jj), clamped at zero before the root.
  Vector column_norms() const;

  /// ||y - Phi w||^2 = kappa + w^T Gamma w - 2 w^T rho (not clamped).
  double residual_energy(const Vector& w) const;

  /// Fieldwise sum; equals the summary of the concatenated data.
  SufficientStats& operator+=(const SufficientStats& other);
  friend SufficientStats operator+(SufficientStats a, const SufficientStats& b) { return a += b; }

 private:
  Matrix gamma_;
  Vector rho_;
  double y_energy_ = 0.0;
  std::int64_t count_ = 0;
};

}  // namespace spice
