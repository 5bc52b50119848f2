#include "cogmask/tracking.hpp"

#include "cogmask/errors.hpp"

#include <cmath>
#include <string>

namespace cogmask {

namespace {

void check_symmetric_pd(const Matrix& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0) throw InputError(std::string(name) + " must be square and nonempty");
  if (!m.allFinite()) throw InputError(std::string(name) + " has non-finite entries");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InputError(std::string(name) + " is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) throw InputError(std::string(name) + " is not positive definite");
}

}  // namespace

StateSpaceModel StateSpaceModel::identity(Eigen::Index m) {
  if (m < 1) throw InputError("state dimension must be >= 1");
  return {Matrix::Identity(m, m), Matrix::Identity(m, m)};
}

void StateSpaceModel::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) throw InputError("A must be square and nonempty");
  if (C.rows() == 0 || C.cols() != A.cols()) throw InputError("C must have as many columns as A");
  if (!A.allFinite() || !C.allFinite()) throw InputError("state-space matrices must be finite");
}

void CovariancePair::validate() const {
  check_symmetric_pd(Q, "Q");
  check_symmetric_pd(R, "R");
}

CovariancePair spectra_to_covariances(const Vector& alpha, const Vector& beta) {
  if (alpha.size() != beta.size() || alpha.size() == 0) throw InputError("spectra must be nonempty and of equal length");
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!(alpha(i) > 0.0) || !std::isfinite(alpha(i))) throw InputError("state-noise spectrum must be positive");
    if (!(beta(i) > 0.0) || !std::isfinite(beta(i))) throw InputError("precision spectrum must be positive");
  }
  return {Matrix(alpha.asDiagonal()), Matrix(beta.cwiseInverse().asDiagonal())};
}

Matrix riccati_step(const StateSpaceModel& model, const Matrix& sigma, const CovariancePair& cov) {
  const Matrix& A = model.A;
  const Matrix& C = model.C;
  if (sigma.rows() != A.rows() || sigma.cols() != A.rows() || cov.Q.rows() != A.rows() || cov.R.rows() != C.rows()) {
    throw InputError("Riccati step: inconsistent dimensions");
  }
  const Matrix innovation = C * sigma * C.transpose() + cov.R;
  const Eigen::LLT<Matrix> llt(innovation);
  if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance is singular");
  const Matrix cs = C * sigma;
  const Matrix filtered = sigma - cs.transpose() * llt.solve(cs);
  const Matrix next = A * filtered * A.transpose() + cov.Q;
  return 0.5 * (next + next.transpose());
}

AreSolution solve_are(const StateSpaceModel& model, const CovariancePair& cov, double tol, int max_iter) {
  if (!(tol > 0.0)) throw InputError("ARE tolerance must be positive");
  if (max_iter < 1) throw InputError("ARE iteration limit must be positive");
  model.validate();
  cov.validate();
  AreSolution out;
  out.sigma = cov.Q;
  for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
    Matrix next = riccati_step(model, out.sigma, cov);
    const double change = (next - out.sigma).norm();
    out.sigma = std::move(next);
    if (!std::isfinite(change)) break;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  if (out.iterations > max_iter) out.iterations = max_iter;
  out.residual = (riccati_step(model, out.sigma, cov) - out.sigma).norm();
  return out;
}

double tracking_mse(const StateSpaceModel& model, const Vector& alpha, const Vector& beta) {
  return solve_are(model, spectra_to_covariances(alpha, beta)).sigma.trace();
}

}  // namespace cogmask
