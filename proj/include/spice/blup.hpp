#pragma once

#include <string>

#include "spice/common.hpp"

namespace spice::blup {

/// Moment model of the training data for fixed hyperparameters:
///   E[y | x] = u(x)^T w0,  Sigma = Psi Theta Psi^T + theta0 I,
///   r(x) = Psi Theta psi(x).
/// Dense and O(n^3); meant for verification on small instances.
struct MomentModel {
  double theta0 = 1.0;
  Vector theta;  ///< diag(Theta), length q
  Matrix U;      ///< n x u mean design
  Matrix Psi;    ///< n x q basis design
  Vector y;      ///< n targets

  Index n() const { return y.size(); }
  void validate() const;
};

/// Returns a copy with theta0 and every theta_k multiplied by c.
MomentModel scaled(const MomentModel& model, double c);

/// Moore-Penrose pseudoinverse; singular values below rel_cutoff * sigma_max
/// are treated as zero.
Matrix pseudo_inverse(const Matrix& A, double rel_cutoff = 1e-12);

/// LC weights lambda(x) of the best linear unbiased predictor at a test point
/// with mean regressor u_x and basis regressor psi_x.
Vector blup_weights(const MomentModel& model, const Vector& u_x, const Vector& psi_x);

/// lambda(x)^T y.
double lc_predict(const MomentModel& model, const Vector& u_x, const Vector& psi_x);

struct LrWeights {
  Vector w0;  ///< mean block, length u
  Vector w1;  ///< basis block, length q
  Vector stacked() const;
};

/// LR weights of the same predictor:
///   w0 = (U^T S^-1 U)^+ U^T S^-1 y,   w1 = Theta Psi^T S^-1 (y - U w0).
LrWeights lr_weights(const MomentModel& model);

double lr_predict(const LrWeights& weights, const Vector& u_x, const Vector& psi_x);

/// True iff the predictions under theta and c*theta agree to `rel_tol`.
bool scale_invariance_check(const MomentModel& model, const Vector& u_x, const Vector& psi_x,
                            double c, double rel_tol = 1e-8);

/// Hyperparameters implied by a SPICE weight vector:
///   theta0 = ||y - Phi w|| / sqrt(n),  theta_k = |w_{u+k}| / ||phi~_{u+k}||.
struct SpiceTheta {
  double theta0 = 0.0;
  Vector theta;
};
SpiceTheta spice_theta(const Matrix& Phi, const Vector& y, Index u, const Vector& w);

struct RoundtripReport {
  bool skipped = false;
  std::string diagnostic;
  SpiceTheta theta;
  double max_abs_diff = 0.0;  ///< max over test rows |BLUP(theta-hat) - phi^T w|
};

/// Rebuilds the BLUP predictor from the SPICE-implied hyperparameters and
/// compares it with phi^T w at every row of `test_Phi`. Skips (with a
/// diagnostic) when theta0 = 0, i.e. the fit interpolates.
RoundtripReport spice_theta_roundtrip(const Matrix& Phi, const Vector& y, Index u,
                                      const Vector& w, const Matrix& test_Phi);

}  // namespace spice::blup
