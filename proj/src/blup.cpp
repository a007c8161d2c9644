#include "spice/blup.hpp"

#include <cmath>

namespace spice::blup {

namespace {

// Sigma factorization plus the pieces shared by every test point.
struct Factorized {
  Eigen::LLT<Matrix> llt;
  Matrix sigma_inv_U;  // Sigma^-1 U
  Matrix gram_pinv;    // (U^T Sigma^-1 U)^+

  explicit Factorized(const MomentModel& model) {
    model.validate();
    const Index n = model.n();
    Matrix sigma = model.Psi * model.theta.asDiagonal() * model.Psi.transpose();
    sigma.diagonal().array() += model.theta0;
    if (model.theta0 == 0.0 && Eigen::FullPivLU<Matrix>(sigma).rank() < n)
      throw NumericalError("Sigma is singular (theta0 = 0 and Psi Theta Psi^T is rank deficient)");
    llt.compute(sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("Sigma is not positive definite");
    sigma_inv_U = llt.solve(model.U);
    gram_pinv = pseudo_inverse(model.U.transpose() * sigma_inv_U);
  }
};

Vector lambda_from(const Factorized& f, const MomentModel& model, const Vector& u_x,
                   const Vector& psi_x) {
  if (u_x.size() != model.U.cols() || psi_x.size() != model.Psi.cols())
    throw DataError("test regressor does not match the model's (u, q) block sizes");
  const Vector r = model.Psi * model.theta.cwiseProduct(psi_x);
  const Vector sigma_inv_r = f.llt.solve(r);
  // Sigma^-1 U G^+ u(x) + Sigma^-1 (I - U G^+ U^T Sigma^-1) r(x)
  const Vector correction = u_x - model.U.transpose() * sigma_inv_r;
  return f.sigma_inv_U * (f.gram_pinv * correction) + sigma_inv_r;
}

}  // namespace

void MomentModel::validate() const {
  const Index rows = y.size();
  if (U.rows() != rows || Psi.rows() != rows)
    throw DataError("moment model: U, Psi and y must have the same number of rows");
  if (theta.size() != Psi.cols()) throw DataError("moment model: theta must have length q");
  if (!(theta0 >= 0.0) || !std::isfinite(theta0))
    throw DataError("moment model: theta0 must be finite and nonnegative");
  if ((theta.array() < 0.0).any() || !theta.allFinite())
    throw DataError("moment model: theta_k must be finite and nonnegative");
}

MomentModel scaled(const MomentModel& model, double c) {
  if (!(c > 0.0)) throw DataError("scale factor must be positive");
  MomentModel out = model;
  out.theta0 *= c;
  out.theta *= c;
  return out;
}

Matrix pseudo_inverse(const Matrix& A, double rel_cutoff) {
  if (A.size() == 0) return Matrix::Zero(A.cols(), A.rows());
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = rel_cutoff * (s.size() > 0 ? s[0] : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) inv[i] = 1.0 / s[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Vector blup_weights(const MomentModel& model, const Vector& u_x, const Vector& psi_x) {
  const Factorized f(model);
  return lambda_from(f, model, u_x, psi_x);
}

double lc_predict(const MomentModel& model, const Vector& u_x, const Vector& psi_x) {
  return blup_weights(model, u_x, psi_x).dot(model.y);
}

Vector LrWeights::stacked() const {
  Vector out(w0.size() + w1.size());
  out << w0, w1;
  return out;
}

LrWeights lr_weights(const MomentModel& model) {
  const Factorized f(model);
  LrWeights out;
  out.w0 = f.gram_pinv * (f.sigma_inv_U.transpose() * model.y);
  const Vector centered = model.y - model.U * out.w0;
  out.w1 = model.theta.cwiseProduct(model.Psi.transpose() * f.llt.solve(centered));
  return out;
}

double lr_predict(const LrWeights& weights, const Vector& u_x, const Vector& psi_x) {
  if (u_x.size() != weights.w0.size() || psi_x.size() != weights.w1.size())
    throw DataError("test regressor does not match the weight blocks");
  return u_x.dot(weights.w0) + psi_x.dot(weights.w1);
}

bool scale_invariance_check(const MomentModel& model, const Vector& u_x, const Vector& psi_x,
                            double c, double rel_tol) {
  const double base = lc_predict(model, u_x, psi_x);
  const double other = lc_predict(scaled(model, c), u_x, psi_x);
  return std::abs(base - other) <= rel_tol * std::max(1.0, std::abs(base));
}

SpiceTheta spice_theta(const Matrix& Phi, const Vector& y, Index u, const Vector& w) {
  if (Phi.rows() != y.size() || Phi.cols() != w.size() || u < 0 || u > w.size())
    throw DataError("spice_theta: inconsistent shapes");
  if (Phi.rows() == 0) throw DataError("spice_theta: no samples");
  SpiceTheta out;
  out.theta0 = (y - Phi * w).norm() / std::sqrt(static_cast<double>(Phi.rows()));
  const Index q = w.size() - u;
  out.theta.resize(q);
  for (Index k = 0; k < q; ++k) {
    const double norm = Phi.col(u + k).norm();
    out.theta[k] = norm > 0.0 ? std::abs(w[u + k]) / norm : 0.0;
  }
  return out;
}

RoundtripReport spice_theta_roundtrip(const Matrix& Phi, const Vector& y, Index u,
                                      const Vector& w, const Matrix& test_Phi) {
  RoundtripReport report;
  report.theta = spice_theta(Phi, y, u, w);
  if (!(report.theta.theta0 > 0.0)) {
    report.skipped = true;
    report.diagnostic = "theta0 = 0: the SPICE fit interpolates the data, BLUP undefined";
    return report;
  }
  if (test_Phi.cols() != Phi.cols()) throw DataError("test regressors have wrong width");

  const Index q = Phi.cols() - u;
  MomentModel model;
  model.theta0 = report.theta.theta0;
  model.theta = report.theta.theta;
  model.U = Phi.leftCols(u);
  model.Psi = Phi.rightCols(q);
  model.y = y;
  const Factorized f(model);
  for (Index i = 0; i < test_Phi.rows(); ++i) {
    const Vector row = test_Phi.row(i).transpose();
    const Vector lambda = lambda_from(f, model, row.head(u), row.tail(q));
    report.max_abs_diff = std::max(report.max_abs_diff, std::abs(lambda.dot(y) - row.dot(w)));
  }
  return report;
}

}  // namespace spice::blup
