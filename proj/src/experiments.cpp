#include "cogmask/experiments.hpp"

#include "cogmask/errors.hpp"
#include "cogmask/revealed_preference.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace cogmask {

ExperimentConfig ExperimentConfig::standard(UtilityKind kind) {
  ExperimentConfig c;
  switch (kind) {
    case UtilityKind::Linear: c.utility = UtilityModel::linear(Vector::Ones(2)); break;
    case UtilityKind::Quadratic: c.utility = UtilityModel::quadratic(Vector::Ones(2)); break;
    case UtilityKind::Custom: throw InputError("the standard configuration has no custom utility");
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (K < 1) throw InputError("K must be >= 1");
  if (m < 1) throw InputError("m must be >= 1");
  if (!(probe_low > 0.0) || !(probe_high > probe_low) || !std::isfinite(probe_high)) {
    throw InputError("probe bounds must satisfy 0 < probe_low < probe_high");
  }
  for (std::size_t j = 0; j < epsilon_grid.size(); ++j) {
    if (!(epsilon_grid[j] >= 0.0) || !std::isfinite(epsilon_grid[j])) throw InputError("epsilon values must be finite and >= 0");
    if (j > 0 && !(epsilon_grid[j] > epsilon_grid[j - 1])) throw InputError("epsilon grid must be strictly increasing");
  }
  if (utility.dimension() != 0 && utility.dimension() != m) throw InputError("utility dimension does not match m");
  solver.validate();
}

MaskingConfig ExperimentConfig::masking(double epsilon) const {
  MaskingConfig c;
  c.epsilon = epsilon;
  c.margin_mode = margin_mode;
  c.enforce_budget = enforce_budget;
  c.solver = solver;
  return c;
}

std::vector<Vector> generate_probes(const ExperimentConfig& config) {
  config.validate();
  std::mt19937_64 gen(config.seed);
  const double width = config.probe_high - config.probe_low;
  std::vector<Vector> probes(static_cast<std::size_t>(config.K), Vector(config.m));
  for (auto& a : probes)
    for (Eigen::Index i = 0; i < config.m; ++i) {
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      a(i) = config.probe_low + width * u;
    }
  return probes;
}

std::vector<double> default_epsilon_grid(double naive_top) {
  double high = 1.2 * naive_top;
  if (!(high > kDefaultGridLow) || !std::isfinite(high)) high = 1e-2;
  std::vector<double> grid(kDefaultGridPoints);
  const double ratio = std::log(high / kDefaultGridLow);
  for (int j = 0; j < kDefaultGridPoints; ++j)
    grid[static_cast<std::size_t>(j)] = kDefaultGridLow * std::exp(ratio * j / (kDefaultGridPoints - 1));
  grid.back() = high;
  return grid;
}

SweepResult run_epsilon_sweep(const ExperimentConfig& config) {
  config.validate();
  const std::vector<Vector> probes = generate_probes(config);
  const MarginEvaluator naive(config.utility, probes, config.margin_mode);

  SweepResult out;
  out.config = config;
  out.naive_top_margin = config.K > 1 ? naive.matrix(naive.naive_responses()).maxCoeff() : 0.0;
  const ProbeResponseDataset naive_data(probes, naive.naive_responses());
  try {
    out.naive_max_margin = max_margin(naive_data);
  } catch (const std::exception&) {
    out.naive_max_margin = std::numeric_limits<double>::quiet_NaN();
  }
  if (out.config.epsilon_grid.empty()) out.config.epsilon_grid = default_epsilon_grid(out.naive_top_margin);

  for (double eps : out.config.epsilon_grid) {
    SweepRow row;
    row.epsilon = eps;
    row.max_margin_after = std::numeric_limits<double>::quiet_NaN();
    bool masked = false;
    try {
      const MaskingResult res = mask_responses(config.utility, probes, config.masking(eps));
      row.loss = res.loss;
      row.converged = res.converged;
      masked = true;
      // an unconverged run may leave responses slightly negative; the adversary sees emitted values
      std::vector<Vector> emitted = res.masked_responses;
      for (auto& b : emitted) b = b.cwiseMax(0.0);
      const ProbeResponseDataset data(probes, std::move(emitted));
      row.afriat_pass_after = afriat_feasibility(data).has_value();
      if (row.afriat_pass_after) row.max_margin_after = max_margin(data);
    } catch (const std::exception&) {
      // a solver error is recorded in the row and the sweep goes on
      if (!masked) {
        row.converged = false;
        row.loss = std::numeric_limits<double>::quiet_NaN();
      }
    }
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace cogmask
