#pragma once

#include "cogmask/dataset.hpp"

namespace cogmask {

/// x_{n+1} = A x_n + w_n,  y_n = C x_n + v_n.
struct StateSpaceModel {
  Matrix A;
  Matrix C;

  /// A = I, C = I at dimension m: probes and responses are then exactly the noise spectra.
  static StateSpaceModel identity(Eigen::Index m);

  Eigen::Index state_dimension() const noexcept { return A.rows(); }
  Eigen::Index observation_dimension() const noexcept { return C.rows(); }
  /// Throws InputError unless A is square, C has A.cols() columns and both are finite.
  void validate() const;
};

/// State-noise covariance Q and observation-noise covariance R, both symmetric
/// positive definite.
struct CovariancePair {
  Matrix Q;
  Matrix R;

  /// Throws InputError on asymmetry beyond 1e-12 or a nonpositive eigenvalue.
  void validate() const;
};

/// Q = diag(alpha), R = diag(beta)^-1.
CovariancePair spectra_to_covariances(const Vector& alpha, const Vector& beta);

/// One predicted-covariance update A(S - SC'(CSC' + R)^-1 CS)A' + Q, symmetrised.
Matrix riccati_step(const StateSpaceModel& model, const Matrix& sigma, const CovariancePair& cov);

struct AreSolution {
  Matrix sigma;
  /// ||riccati_step(sigma) - sigma||_F
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Fixed-point iteration of riccati_step from Q until successive iterates differ by
/// less than tol in Frobenius norm. Detectability of (A, C) and stabilisability of
/// (A, sqrt(Q)) are assumed, not checked; convergence is judged from the result.
/// Non-convergence is reported through `converged`, never thrown.
AreSolution solve_are(const StateSpaceModel& model, const CovariancePair& cov, double tol = 1e-12,
                      int max_iter = 100000);

/// trace of the steady-state predicted covariance for spectra (alpha, beta).
double tracking_mse(const StateSpaceModel& model, const Vector& alpha, const Vector& beta);

}  // namespace cogmask
