#include "spice/features.hpp"

#include <cmath>
#include <numbers>

namespace spice {

namespace {

double laplace_sine(double x, double half_width, int k) {
  return std::sin(std::numbers::pi * k * (x + half_width) / (2.0 * half_width)) /
         std::sqrt(half_width);
}

Index checked_power(int base, int exponent) {
  Index result = 1;
  for (int i = 0; i < exponent; ++i) {
    result *= base;
    if (result > FeatureMap::kMaxBasisWidth)
      throw DataError("Laplace tensor basis too large: m^d exceeds " +
                      std::to_string(FeatureMap::kMaxBasisWidth));
  }
  return result;
}

}  // namespace

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Linear: return "linear";
    case BasisKind::LaplaceTensor: return "laplace-tensor";
    case BasisKind::LaplaceAdditive: return "laplace-additive";
  }
  return "unknown";
}

std::string to_string(MeanKind kind) {
  switch (kind) {
    case MeanKind::None: return "none";
    case MeanKind::Constant: return "constant";
    case MeanKind::Affine: return "affine";
  }
  return "unknown";
}

BasisKind parse_basis_kind(std::string_view text) {
  if (text == "linear") return BasisKind::Linear;
  if (text == "laplace-tensor") return BasisKind::LaplaceTensor;
  if (text == "laplace-additive") return BasisKind::LaplaceAdditive;
  throw DataError("unknown feature kind '" + std::string(text) + "'");
}

MeanKind parse_mean_kind(std::string_view text) {
  if (text == "none") return MeanKind::None;
  if (text == "constant") return MeanKind::Constant;
  if (text == "affine") return MeanKind::Affine;
  throw DataError("unknown mean kind '" + std::string(text) + "'");
}

FeatureMap::FeatureMap(BasisKind kind, MeanKind mean, int input_dim, int m,
                       std::vector<double> half_widths)
    : kind_(kind), mean_(mean), input_dim_(input_dim), m_(m),
      half_widths_(std::move(half_widths)) {
  if (input_dim_ < 1) throw DataError("feature map needs input dimension >= 1");
  if (kind_ == BasisKind::Linear) {
    m_ = 0;
    half_widths_.clear();
    return;
  }
  if (m_ < 1) throw DataError("Laplace basis needs m >= 1");
  if (half_widths_.size() == 1 && input_dim_ > 1)
    half_widths_.assign(static_cast<std::size_t>(input_dim_), half_widths_[0]);
  if (half_widths_.size() != static_cast<std::size_t>(input_dim_))
    throw DataError("Laplace basis needs one half-width per input dimension (got " +
                    std::to_string(half_widths_.size()) + ", d = " +
                    std::to_string(input_dim_) + ")");
  for (double L : half_widths_)
    if (!(L > 0.0) || !std::isfinite(L))
      throw DataError("Laplace half-widths must be positive and finite");
  if (kind_ == BasisKind::LaplaceTensor) checked_power(m_, input_dim_);
}

FeatureMap FeatureMap::linear(int input_dim, MeanKind mean) {
  return FeatureMap(BasisKind::Linear, mean, input_dim, 0, {});
}

FeatureMap FeatureMap::laplace_tensor(std::vector<double> half_widths, int m, MeanKind mean) {
  const int d = static_cast<int>(half_widths.size());
  return FeatureMap(BasisKind::LaplaceTensor, mean, d, m, std::move(half_widths));
}

FeatureMap FeatureMap::laplace_additive(std::vector<double> half_widths, int m, MeanKind mean) {
  const int d = static_cast<int>(half_widths.size());
  return FeatureMap(BasisKind::LaplaceAdditive, mean, d, m, std::move(half_widths));
}

Index FeatureMap::mean_width() const {
  switch (mean_) {
    case MeanKind::None: return 0;
    case MeanKind::Constant: return 1;
    case MeanKind::Affine: return 1 + input_dim_;
  }
  return 0;
}

Index FeatureMap::basis_width() const {
  switch (kind_) {
    case BasisKind::Linear: return input_dim_;
    case BasisKind::LaplaceTensor: return checked_power(m_, input_dim_);
    case BasisKind::LaplaceAdditive: return static_cast<Index>(m_) * input_dim_;
  }
  return 0;
}

Vector FeatureMap::evaluate(std::span<const double> x) const {
  Vector phi(dim());
  evaluate_into(x, std::span<double>(phi.data(), static_cast<std::size_t>(phi.size())));
  return phi;
}

void FeatureMap::evaluate_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != static_cast<std::size_t>(input_dim_))
    throw DataError("input has " + std::to_string(x.size()) + " coordinates, feature map expects " +
                    std::to_string(input_dim_));
  if (out.size() != static_cast<std::size_t>(dim()))
    throw DataError("regressor buffer has wrong length");

  std::size_t pos = 0;
  if (mean_ != MeanKind::None) out[pos++] = 1.0;
  if (mean_ == MeanKind::Affine)
    for (double v : x) out[pos++] = v;

  const std::size_t d = x.size();
  const auto m = static_cast<std::size_t>(m_);
  switch (kind_) {
    case BasisKind::Linear:
      for (double v : x) out[pos++] = v;
      break;
    case BasisKind::LaplaceAdditive:
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 1; k <= m; ++k)
          out[pos++] = laplace_sine(x[j], half_widths_[j], static_cast<int>(k));
      break;
    case BasisKind::LaplaceTensor: {
      // Build the product block in place: after processing dimension j the
      // first m^(j+1) slots hold all products over dimensions 0..j with k_0
      // varying fastest.
      std::span<double> block = out.subspan(pos);
      std::vector<double> sines(m);
      for (std::size_t k = 1; k <= m; ++k) block[k - 1] = laplace_sine(x[0], half_widths_[0], static_cast<int>(k));
      std::size_t filled = m;
      for (std::size_t j = 1; j < d; ++j) {
        for (std::size_t k = 1; k <= m; ++k) sines[k - 1] = laplace_sine(x[j], half_widths_[j], static_cast<int>(k));
        // Walk backwards so the source prefix is not overwritten before use.
        for (std::size_t k = m; k-- > 0;)
          for (std::size_t i = filled; i-- > 0;) block[k * filled + i] = block[i] * sines[k];
        filled *= m;
      }
      break;
    }
  }
}

Matrix FeatureMap::design_matrix(const Matrix& X) const {
  if (X.cols() != input_dim_)
    throw DataError("design input has " + std::to_string(X.cols()) + " columns, expected " +
                    std::to_string(input_dim_));
  Matrix Phi(X.rows(), dim());
  Vector row(dim());
  std::vector<double> x(static_cast<std::size_t>(input_dim_));
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) x[static_cast<std::size_t>(j)] = X(i, j);
    evaluate_into(x, std::span<double>(row.data(), static_cast<std::size_t>(row.size())));
    Phi.row(i) = row.transpose();
  }
  return Phi;
}

nlohmann::json FeatureMap::to_json() const {
  return nlohmann::json{{"kind", to_string(kind_)},
                        {"mean_kind", to_string(mean_)},
                        {"d", input_dim_},
                        {"m", m_},
                        {"half_widths", half_widths_}};
}

FeatureMap FeatureMap::from_json(const nlohmann::json& j) {
  try {
    const BasisKind kind = parse_basis_kind(j.at("kind").get<std::string>());
    const MeanKind mean = parse_mean_kind(j.at("mean_kind").get<std::string>());
    const int d = j.at("d").get<int>();
    const int m = j.value("m", 0);
    std::vector<double> widths = j.value("half_widths", std::vector<double>{});
    return FeatureMap(kind, mean, d, m, std::move(widths));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed feature_map: ") + e.what());
  }
}

}  // namespace spice
