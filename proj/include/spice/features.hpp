#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spice/common.hpp"

namespace spice {

enum class BasisKind { Linear, LaplaceTensor, LaplaceAdditive };
enum class MeanKind { None, Constant, Affine };

std::string to_string(BasisKind kind);
std::string to_string(MeanKind kind);
BasisKind parse_basis_kind(std::string_view text);
MeanKind parse_mean_kind(std::string_view text);

/// Maps a raw input x (length d) to the regressor phi(x) = col{u(x), psi(x)}.
///
/// The mean block u(x) comes first and is left unpenalized by the SPICE
/// objective; its width is `mean_width()`. The basis block psi(x) follows:
///
///  - Linear:          psi(x) = x, q = d
///  - LaplaceTensor:   q = m^d products of per-dimension sines, k_1 varying
///                     fastest
///  - LaplaceAdditive: q = m*d, dimension-major then index-minor
///
/// The Laplace sines are the Dirichlet eigenfunctions of the box
/// [-L_1, L_1] x ... x [-L_d, L_d]:
///
///   (1/sqrt(L_j)) sin(pi k (x_j + L_j) / (2 L_j)),  k = 1..m
///
/// Immutable after construction.
class FeatureMap {
 public:
  /// Largest basis width accepted; guards m^d against overflow.
  static constexpr Index kMaxBasisWidth = 1 << 22;

  FeatureMap(BasisKind kind, MeanKind mean, int input_dim, int m,
             std::vector<double> half_widths);

  static FeatureMap linear(int input_dim, MeanKind mean = MeanKind::Constant);
  static FeatureMap laplace_tensor(std::vector<double> half_widths, int m,
                                   MeanKind mean = MeanKind::Constant);
  static FeatureMap laplace_additive(std::vector<double> half_widths, int m,
                                     MeanKind mean = MeanKind::Constant);

  BasisKind kind() const { return kind_; }
  MeanKind mean_kind() const { return mean_; }
  int input_dim() const { return input_dim_; }
  int indices_per_dim() const { return m_; }
  const std::vector<double>& half_widths() const { return half_widths_; }

  /// u: length of the unpenalized prefix.
  Index mean_width() const;
  /// q: length of the basis block.
  Index basis_width() const;
  /// p = u + q.
  Index dim() const { return mean_width() + basis_width(); }

  Vector evaluate(std::span<const double> x) const;
  /// Writes phi(x) into `out`, which must have length dim().
  void evaluate_into(std::span<const double> x, std::span<double> out) const;

  /// Evaluates every row of X (n x d) into an n x p regressor matrix.
  Matrix design_matrix(const Matrix& X) const;

  nlohmann::json to_json() const;
  static FeatureMap from_json(const nlohmann::json& j);

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  BasisKind kind_;
  MeanKind mean_;
  int input_dim_;
  int m_;
  std::vector<double> half_widths_;
};

}  // namespace spice
