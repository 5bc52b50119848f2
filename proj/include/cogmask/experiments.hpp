#pragma once

#include "cogmask/masking.hpp"

#include <cstdint>
#include <vector>

namespace cogmask {

struct ExperimentConfig {
  int K = 50;
  int m = 2;
  double probe_low = 0.2;
  double probe_high = 2.5;
  /// Strictly increasing, nonnegative. Empty selects default_epsilon_grid at run time.
  std::vector<double> epsilon_grid;
  UtilityModel utility = UtilityModel::linear(Vector::Ones(2));
  MarginMode margin_mode = MarginMode::MultiplierMargin;
  std::uint64_t seed = 42;
  bool enforce_budget = true;
  SolverOptions solver;

  /// K = 50, m = 2, Unif(0.2, 2.5) probes, unit weights on the given utility kind.
  static ExperimentConfig standard(UtilityKind kind);

  void validate() const;
  MaskingConfig masking(double epsilon) const;
};

/// K probes of dimension m, entries uniform on [probe_low, probe_high), drawn in the
/// order t = 1..K, i = 1..m from mt19937_64. The uniform variate is (x >> 11) * 2^-53,
/// so the sequence is identical across standard libraries.
std::vector<Vector> generate_probes(const ExperimentConfig& config);

inline constexpr int kDefaultGridPoints = 20;
inline constexpr double kDefaultGridLow = 1e-3;

/// 20 geometrically spaced values from 1e-3 to 1.2 * naive_top, where naive_top is the
/// largest entry of the naive margin matrix. Falls back to 1e-2 as the upper end when
/// 1.2 * naive_top <= 1e-3 (e.g. K = 1).
std::vector<double> default_epsilon_grid(double naive_top);

struct SweepRow {
  double epsilon = 0.0;
  double loss = 0.0;
  /// max_margin of the masked dataset; NaN when it fails the Afriat test or the
  /// margin program errors.
  double max_margin_after = 0.0;
  bool afriat_pass_after = false;
  bool converged = false;
};

struct SweepResult {
  /// Snapshot of the configuration with the grid actually used.
  ExperimentConfig config;
  std::vector<SweepRow> rows;
  /// Largest entry of the naive margin matrix and max_margin of the naive dataset.
  double naive_top_margin = 0.0;
  double naive_max_margin = 0.0;
};

/// Draws probes once, then for each epsilon masks, records the loss and runs the
/// adversary (afriat_feasibility, max_margin) on the masked dataset. Solver failures
/// are recorded in the row; the sweep itself does not abort.
SweepResult run_epsilon_sweep(const ExperimentConfig& config);

}  // namespace cogmask
