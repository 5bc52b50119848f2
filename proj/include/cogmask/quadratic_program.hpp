#pragma once

#include "cogmask/dataset.hpp"

#include <vector>

namespace cogmask::qp {

enum class Status { Optimal, Infeasible, IterationLimit };

const char* to_string(Status status) noexcept;

struct Options {
  /// A row counts as satisfied when h_i - G_i x >= -feasibility_tolerance * max(1, norm(G_i)).
  double feasibility_tolerance = 1e-12;
  /// Rows found linearly dependent on the active set while violated by at most this
  /// (normalised) amount are set aside rather than reported infeasible.
  double dependent_tolerance = 1e-8;
  int max_iterations = 100000;
};

struct Solution {
  Status status = Status::IterationLimit;
  Vector x;
  /// One multiplier per row of G (zero for inactive rows).
  Vector multipliers;
  std::vector<Eigen::Index> active_set;
  double max_violation = 0.0;
  int iterations = 0;
};

/// Minimum-norm point of a polyhedron:
///
///   minimize  1/2 ||x||^2   subject to  G x <= h.
///
/// Dual active-set method of Goldfarb and Idnani specialised to an identity
/// Hessian: start at the unconstrained minimiser x = 0 and repeatedly add the most
/// violated row, dropping active rows whose multipliers would turn negative. The
/// active normals stay linearly independent, so each step is a small least-squares
/// solve against them. Rows of G with zero norm are checked for consistency and
/// otherwise ignored.
Solution solve_min_norm(const Matrix& G, const Vector& h, const Options& options = {});

}  // namespace cogmask::qp
