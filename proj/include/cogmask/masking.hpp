#pragma once

#include "cogmask/dataset.hpp"
#include "cogmask/utility.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace cogmask {

/// How the per-pair margin of the true utility is measured.
///
///   MultiplierMargin     v(b_t) + lambda_t a_t'(b_s - b_t) - v(b_s), v the degree-one
///                        homogeneous representation of u and lambda_t its KKT multiplier
///                        at the naive optimum. Default.
///   RawMultiplierMargin  same formula on the raw utility u. Identical to the default for
///                        Linear models; for Quadratic models the naive margins of pairs
///                        sharing a vertex are negative.
///   ConcavitySlack       u(b_t) + grad u(b_t)'(b_s - b_t) - u(b_s)
///   LiteralGradient      u(b_s) - u(b_t) + grad u(b_t)'(b_s - b_t)
enum class MarginMode { MultiplierMargin, RawMultiplierMargin, ConcavitySlack, LiteralGradient };

const char* to_string(MarginMode mode) noexcept;
/// Accepts "multiplier", "multiplier_raw", "concavity_slack", "literal_gradient"; throws InputError otherwise.
MarginMode margin_mode_from_string(std::string_view text);

struct SolverOptions {
  int max_outer_iterations = 50;
  int max_inner_iterations = 2000;
  /// First trial step of the inner line search (Newton steps are scaled by it).
  double step_size = 1.0;
  double penalty_growth = 10.0;
  double initial_penalty = 10.0;
  double tolerance = 1e-8;

  void validate() const;
};

struct MaskingConfig {
  double epsilon = 0.0;
  MarginMode margin_mode = MarginMode::MultiplierMargin;
  bool enforce_budget = true;
  SolverOptions solver;

  void validate() const;
};

/// Per-pair margins of a response sequence against fixed probes. Multipliers
/// lambda_t are frozen at the naive optimum of each probe.
class MarginEvaluator {
 public:
  MarginEvaluator(UtilityModel model, std::vector<Vector> probes, MarginMode mode);

  std::size_t size() const noexcept { return probes_.size(); }
  MarginMode mode() const noexcept { return mode_; }
  const UtilityModel& model() const noexcept { return model_; }
  const std::vector<Vector>& probes() const noexcept { return probes_; }
  const std::vector<Vector>& naive_responses() const noexcept { return naive_; }
  /// KKT multipliers max_i dv(b*_t)/db(i) / a_t(i) (empty outside the multiplier modes).
  const std::vector<double>& multipliers() const noexcept { return lambda_; }

  /// M[t][s]; zero for t == s.
  double margin(std::size_t t, std::size_t s, const Vector& beta_t, const Vector& beta_s) const;
  /// Partial derivatives of M[t][s] with respect to beta_t and beta_s.
  void margin_gradient(std::size_t t, std::size_t s, const Vector& beta_t, const Vector& beta_s, Vector& d_t,
                       Vector& d_s) const;
  Matrix matrix(const std::vector<Vector>& responses) const;

  /// Value, gradient and (optionally) Hessian at one response of the function the
  /// margins are built from: v for MultiplierMargin, u otherwise. Solvers evaluate
  /// each response once and combine points pairwise with the overloads below.
  struct Point {
    Vector beta;
    double value = 0.0;
    Vector gradient;
    Matrix hessian;
  };
  Point point(const Vector& beta, bool with_hessian) const;

  double margin(std::size_t t, const Point& pt, const Point& ps) const;
  void margin_gradient(std::size_t t, const Point& pt, const Point& ps, Vector& d_t, Vector& d_s) const;
  /// Second-derivative blocks d2M/dbeta_t2, d2M/dbeta_t dbeta_s, d2M/dbeta_s2 (needs
  /// points with Hessians). Third-derivative terms of the slack modes are dropped,
  /// which is exact for Linear and Quadratic models.
  void margin_hessian(const Point& pt, const Point& ps, Matrix& h_tt, Matrix& h_ts, Matrix& h_ss) const;

 private:

  UtilityModel model_;
  std::vector<Vector> probes_;
  MarginMode mode_;
  std::vector<Vector> naive_;
  std::vector<double> lambda_;
};

Matrix margin_matrix(const UtilityModel& model, const std::vector<Vector>& probes,
                     const std::vector<Vector>& responses, MarginMode mode);

struct MaskingResult {
  std::vector<Vector> naive_responses;
  std::vector<Vector> eta;
  /// naive_responses + eta
  std::vector<Vector> masked_responses;
  double loss = 0.0;
  Matrix margins;
  bool converged = false;
  int iterations = 0;
  /// Largest violation over margin bounds, nonnegativity and (if enforced) budgets.
  double max_violation = 0.0;
  /// "active_set_qp" for affine margins, "augmented_lagrangian" otherwise.
  std::string method;
};

/// Minimum-perturbation masking:
///
///   minimize sum_t ||eta_t||^2
///   s.t. 0 <= M[t][s](b* + eta) <= epsilon  (t != s),  b*_t + eta_t >= 0,
///        alpha_t'(b*_t + eta_t) <= 1  (when enforce_budget).
///
/// Affine margins (Linear utility) give a convex QP solved exactly by the active-set
/// method. Otherwise an augmented-Lagrangian loop runs from eta = 0 over all
/// constraints, each subproblem minimised by damped Newton steps on the dense
/// Hessian; converged once the violation and the step between outer iterations are
/// both below the tolerance. Infeasible or unconverged runs return the last iterate
/// with converged = false.
MaskingResult mask_responses(const UtilityModel& model, const std::vector<Vector>& probes,
                             const MaskingConfig& config);

/// sum_t ||eta_t||^2, recomputed from the stored perturbations.
double performance_loss(const MaskingResult& result);

}  // namespace cogmask
