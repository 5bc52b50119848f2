#pragma once

#include "cogmask/dataset.hpp"

namespace cogmask::lp {

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(Status status) noexcept;

/// minimize c'x  subject to  A x = b,  x >= 0
struct StandardFormLp {
  Matrix A;
  Vector b;
  Vector c;
};

struct SimplexOptions {
  double pivot_tolerance = 1e-11;
  double cost_tolerance = 1e-11;
  double feasibility_tolerance = 1e-9;
  int max_iterations = 200000;
  /// Consecutive degenerate pivots tolerated under Dantzig's rule before
  /// switching to Bland's rule for the rest of the phase.
  int degenerate_switch = 50;
};

struct LpSolution {
  Status status = Status::IterationLimit;
  Vector x;
  /// Simplex multipliers y = c_B' B^{-1}; at optimality A'y <= c holds componentwise.
  Vector duals;
  double objective = 0.0;
  int iterations = 0;
};

/// Dense two-phase tableau simplex. Intended for the small dense programs that
/// appear in the Afriat machinery (a few hundred rows at most).
LpSolution solve(const StandardFormLp& problem, const SimplexOptions& options = {});

/// minimize c'x  subject to  G x <= h  (x free)
struct InequalityLp {
  Vector c;
  Matrix G;
  Vector h;
};

struct InteriorPointOptions {
  /// Relative bound on the primal and dual residuals.
  double tolerance = 1e-9;
  /// Relative bound on the duality gap s'y (this is what limits the objective error).
  double gap_tolerance = 1e-13;
  /// Residual bound accepted once the gap has vanished but round-off keeps the
  /// residuals above `tolerance`.
  double stall_tolerance = 1e-6;
  int max_iterations = 200;
};

struct InequalitySolution {
  Status status = Status::IterationLimit;
  Vector x;
  /// y >= 0 with c + G'y = 0 at optimality.
  Vector multipliers;
  double objective = 0.0;
  int iterations = 0;
};

/// Mehrotra predictor-corrector interior-point method. The normal matrix G'DG is
/// assembled from the nonzeros of each row, so long thin programs with sparse rows
/// (one row per ordered pair of observations) stay cheap. Degeneracy does not slow
/// it down, unlike the simplex. G must have full column rank. Infeasible or
/// unbounded programs, and runs stalled by round-off, end as IterationLimit.
InequalitySolution solve_interior_point(const InequalityLp& problem, const InteriorPointOptions& options = {});

}  // namespace cogmask::lp
