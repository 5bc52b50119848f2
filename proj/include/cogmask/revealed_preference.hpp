#pragma once

#include "cogmask/dataset.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace cogmask {

/// Absolute tolerance under which alpha_t'beta_s and alpha_t'beta_t count as equal.
inline constexpr double kTieTolerance = 1e-12;
/// Default absolute tolerance for the Afriat inequalities.
inline constexpr double kAfriatTolerance = 1e-9;
/// Default upper bound on the multipliers in the margin program.
inline constexpr double kDefaultLambdaCap = 100.0;
/// Value reported by max_margin when the program has no off-diagonal constraint.
inline constexpr double kDefaultMarginCap = 1e6;

/// Utility levels u_t and multipliers lambda_t solving the Afriat inequalities
///   u_s - u_t - lambda_t * alpha_t'(beta_s - beta_t) <= 0   for all s, t.
struct AfriatCertificate {
  std::vector<double> levels;
  std::vector<double> multipliers;
};

/// Largest left-hand side of the Afriat inequalities (<= 0 means exact feasibility).
/// Throws InputError if the certificate length does not match the dataset.
double afriat_violation(const AfriatCertificate& certificate, const ProbeResponseDataset& dataset);

/// True when every multiplier is positive and every inequality holds within tol.
bool certifies(const AfriatCertificate& certificate, const ProbeResponseDataset& dataset,
               double tol = kAfriatTolerance);

/// Concave, monotone, min-of-affine utility
///   u(beta) = min_t { u_t + lambda_t * alpha_t'(beta - beta_t) }.
class ReconstructedUtility {
 public:
  struct Piece {
    double level;
    double multiplier;
    Vector probe;
    Vector response;
  };

  explicit ReconstructedUtility(std::vector<Piece> pieces);

  double operator()(const Vector& beta) const;
  /// Index of the piece attaining the minimum (lowest index on ties).
  std::size_t active_piece(const Vector& beta) const;

  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  Eigen::Index dimension() const noexcept { return pieces_.front().probe.size(); }

 private:
  std::vector<Piece> pieces_;
};

struct RationalityVerdict {
  bool passes = false;
  std::optional<AfriatCertificate> certificate;
  /// Zero-based observation indices t_1, ..., t_j of a shortest GARP-violating cycle,
  /// rotated so the smallest index comes first. The closing edge t_j -> t_1 is implied.
  std::optional<std::vector<std::size_t>> violation_cycle;
  /// max_margin of the dataset (NaN when the test fails).
  double max_margin = 0.0;
};

/// Weak revealed-preference relation: R(t, s) iff alpha_t'beta_s <= alpha_t'beta_t (within tie_tol), t != s.
/// strict(t, s) iff alpha_t'beta_s < alpha_t'beta_t - tie_tol.
struct RevealedPreferenceRelation {
  std::vector<std::vector<bool>> weak;
  std::vector<std::vector<bool>> strict;
  /// Reflexive-transitive closure of `weak` (Warshall).
  std::vector<std::vector<bool>> closure;
};

RevealedPreferenceRelation revealed_preference_relation(const ProbeResponseDataset& dataset,
                                                        double tie_tol = kTieTolerance);

/// GARP test. On success the verdict carries an Afriat certificate and the
/// max_margin diagnostic; on failure a minimal witnessing cycle.
RationalityVerdict check_garp(const ProbeResponseDataset& dataset, double lambda_cap = kDefaultLambdaCap);

/// Solves the Afriat inequalities combinatorially (strongly connected components of
/// the revealed-preference graph plus incremental shortest-path potentials). The
/// result is checked by substitution; if rounding spoils it, the LP route is tried.
/// A dataset that violates GARP is still accepted when some certificate with
/// multipliers in [1, kDefaultLambdaCap] violates the inequalities by at most tol
/// (after scaling the largest multiplier to 1); otherwise nullopt.
std::optional<AfriatCertificate> afriat_feasibility(const ProbeResponseDataset& dataset,
                                                    double tol = kAfriatTolerance);

/// Independent route: LP feasibility of the Afriat inequalities with lambda_t >= 1,
/// solved through its dual by the dense simplex.
std::optional<AfriatCertificate> afriat_feasibility_lp(const ProbeResponseDataset& dataset,
                                                       double tol = kAfriatTolerance);

/// Throws ContractError if the certificate does not satisfy the dataset within tol.
ReconstructedUtility construct_utility(const AfriatCertificate& certificate,
                                       const ProbeResponseDataset& dataset, double tol = kAfriatTolerance);

struct MarginSolution {
  double margin = 0.0;
  /// Maximizing (u, lambda); empty for K = 1.
  AfriatCertificate certificate;
};

/// phi* = max phi  s.t.  u_s - u_t - lambda_t alpha_t'(beta_s - beta_t) <= -phi  (s != t),
///                       1 <= lambda_t <= lambda_cap,  phi <= margin_cap.
/// phi* may be slightly negative (>= -tol) for datasets accepted only within tolerance.
/// Throws ContractError when afriat_feasibility rejects the dataset and InputError for
/// lambda_cap <= 1.
MarginSolution max_margin_solution(const ProbeResponseDataset& dataset, double lambda_cap = kDefaultLambdaCap,
                                   double margin_cap = kDefaultMarginCap);

double max_margin(const ProbeResponseDataset& dataset, double lambda_cap = kDefaultLambdaCap,
                  double margin_cap = kDefaultMarginCap);

}  // namespace cogmask
