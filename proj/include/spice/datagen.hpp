#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spice/common.hpp"

namespace spice::datagen {

/// Sparse linear mean with heavy-tailed noise and rank-deficient Gaussian
/// inputs:
///   x = A z,  z ~ N(0, I_r),  A fixed d x r with ||A||_F^2 = d,
///   y = intercept + coefficient * sum_{j in support} x_j + noise,
///   noise = t_nu * sqrt(noise_variance (nu - 2) / nu).
/// How the d x r mixing matrix A is drawn (all give tr(A A^T) = d):
///  - Gaussian:        i.i.d. N(0,1) entries, rescaled globally
///  - Orthonormal:     orthonormalized Gaussian columns times sqrt(d / r), so
///                     the r nonzero covariance eigenvalues are equal
///  - UnitDiagonal:    i.i.d. N(0,1) entries with each row rescaled so every
///                     x_j has unit variance
enum class MixingKind { Gaussian, Orthonormal, UnitDiagonal };

std::string to_string(MixingKind kind);
MixingKind parse_mixing_kind(std::string_view text);

struct SparseStudentTConfig {
  int d = 100;
  std::vector<int> support{0, 9, 19, 29, 39};  ///< zero-based columns
  double coefficient = 5.0;
  double intercept = 1.0;
  double noise_variance = 4.0;
  double nu = 3.0;
  int rank = 0;  ///< 0 means d / 2
  MixingKind mixing = MixingKind::Gaussian;
  std::uint64_t seed = 0;  ///< fixes A

  int resolved_rank() const { return rank > 0 ? rank : d / 2; }
  /// Throws DataError for nu <= 2 and inconsistent sizes.
  void validate() const;
  nlohmann::json to_json() const;
  static SparseStudentTConfig from_json(const nlohmann::json& j);
};

struct Dataset {
  Matrix X;  ///< n x d
  Vector y;
};

class SparseStudentTGenerator {
 public:
  explicit SparseStudentTGenerator(SparseStudentTConfig config);

  /// n fresh rows; the draw depends only on (config, seed).
  Dataset sample(Index n, std::uint64_t seed) const;

  const SparseStudentTConfig& config() const { return config_; }
  /// A (d x r); the input covariance is A A^T.
  const Matrix& mixing() const { return mixing_; }
  /// True coefficient vector over x (length d).
  const Vector& coefficients() const { return beta_; }
  /// sqrt(noise_variance (nu - 2) / nu).
  double noise_scale() const;

  /// E[(y - b - x^T w)^2] for a fresh draw, in closed form:
  ///   noise_variance + (intercept - b)^2 + ||A^T (beta - w)||^2.
  double population_risk(double b, const Vector& w) const;

 private:
  SparseStudentTConfig config_;
  Matrix mixing_;
  Vector beta_;
};

}  // namespace spice::datagen
