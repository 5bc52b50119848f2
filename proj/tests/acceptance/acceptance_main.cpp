// One line per acceptance criterion; exits nonzero if any asserted criterion fails.

#include "cogmask/experiments.hpp"
#include "cogmask/io.hpp"
#include "cogmask/masking.hpp"
#include "cogmask/revealed_preference.hpp"
#include "cogmask/tracking.hpp"
#include "cogmask/utility.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cogmask;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  bool asserted = true;
};

int failures = 0;

void report(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += " [over time budget]";
  }
  if (o.asserted && !o.pass) ++failures;
  std::printf("criterion %d %s: %s%s (%.2fs / %.0fs) %s\n", id, name.c_str(), o.pass ? "PASS" : "FAIL",
              o.asserted ? "" : " [reported, not asserted]", secs, budget_s, o.detail.c_str());
  std::fflush(stdout);
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Substitutes every Afriat inequality directly; returns the largest left-hand side.
double afriat_lhs(const AfriatCertificate& c, const ProbeResponseDataset& d) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < d.size(); ++t) {
    if (!(c.multipliers[t] > 0.0)) return std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < d.size(); ++s) {
      if (s == t) continue;
      const double step = oracle::dot(d.probe(t), d.response(s)) - oracle::dot(d.probe(t), d.response(t));
      worst = std::max(worst, c.levels[s] - c.levels[t] - c.multipliers[t] * step);
    }
  }
  return d.size() == 1 ? 0.0 : worst;
}

// Budget-exhausting responses of one fixed utility: Cobb-Douglas (interior) or linear (vertex).
ProbeResponseDataset consistent_dataset(std::mt19937_64& rng, std::size_t k, bool cobb_douglas) {
  std::uniform_real_distribution<double> u(0.2, 2.5), w(0.1, 1.0);
  const double w1 = w(rng), w2 = w(rng);
  std::vector<Vector> a, b;
  for (std::size_t t = 0; t < k; ++t) {
    const Vector alpha = vec2(u(rng), u(rng));
    Vector beta;
    if (cobb_douglas) {
      beta = vec2(w1 / ((w1 + w2) * alpha(0)), w2 / ((w1 + w2) * alpha(1)));
    } else {
      beta = (w1 / alpha(0) >= w2 / alpha(1)) ? vec2(1.0 / alpha(0), 0.0) : vec2(0.0, 1.0 / alpha(1));
    }
    a.push_back(alpha);
    b.push_back(beta);
  }
  return ProbeResponseDataset(a, b);
}

// Criterion 1
Outcome equivalence_suite() {
  std::mt19937_64 rng(101);
  int disagreements = 0, bad_certificates = 0, rational = 0;
  for (int n = 0; n < 200; ++n) {
    const std::size_t k = 2 + static_cast<std::size_t>(rng() % 5);
    const auto d = (n % 2 == 0) ? oracle::random_dataset(rng, k, 2) : consistent_dataset(rng, k, n % 4 == 1);
    const bool brute = !oracle::brute_force_garp_violation(d);
    const auto verdict = check_garp(d);
    const auto cert = afriat_feasibility(d);
    if (verdict.passes != brute || cert.has_value() != brute) ++disagreements;
    if (brute) ++rational;
    if (verdict.certificate && afriat_lhs(*verdict.certificate, d) > 1e-9) ++bad_certificates;
    if (cert && afriat_lhs(*cert, d) > 1e-9) ++bad_certificates;
  }
  Outcome o;
  o.pass = disagreements == 0 && bad_certificates == 0;
  o.detail = "disagreements=" + std::to_string(disagreements) + " bad_certificates=" + std::to_string(bad_certificates) +
             " rational=" + std::to_string(rational) + "/200";
  return o;
}

// Criterion 2
Outcome rationalization_suite() {
  std::mt19937_64 rng(202);
  int violations = 0, points = 0;
  for (int n = 0; n < 50; ++n) {
    const auto d = consistent_dataset(rng, 2 + static_cast<std::size_t>(rng() % 7), n % 2 == 0);
    const auto cert = afriat_feasibility(d);
    if (!cert) return {false, "dataset " + std::to_string(n) + " rejected"};
    const auto u = construct_utility(*cert, d);
    for (std::size_t t = 0; t < d.size(); ++t) {
      const double chosen = u(d.response(t));
      for (const auto& b : oracle::budget_grid_2d(d.probe(t), oracle::dot(d.probe(t), d.response(t)), 1000)) {
        ++points;
        if (u(b) > chosen + 1e-9) ++violations;
      }
    }
  }
  return {violations == 0, "violations=" + std::to_string(violations) + " of " + std::to_string(points) + " points"};
}

// Criterion 3
Outcome are_oracle() {
  double worst_rel = 0.0, worst_residual = 0.0, worst_recursion = 0.0, scalar_recursion = 0.0;
  int unconverged = 0;
  auto recursion = [](const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R) {
    Matrix S = Q;
    for (int n = 0; n < 500; ++n) {
      const Matrix gain = S * C.transpose() * (C * S * C.transpose() + R).inverse();
      S = A * (S - gain * C * S) * A.transpose() + Q;
    }
    return S;
  };
  // The 500-step comparison is asserted on the general models. Scalar cells with q small and
  // r large contract by about (r / (sigma + r))^2 per step, so 500 steps of the recursion have
  // not settled there; their gap is printed but the closed form is the oracle for that grid.
  auto record = [&](const StateSpaceModel& model, const CovariancePair& cov, double& gap) {
    const auto sol = solve_are(model, cov);
    if (!sol.converged) {
      ++unconverged;
      return sol;
    }
    worst_residual = std::max(worst_residual, sol.residual);
    const Matrix ref = recursion(model.A, model.C, cov.Q, cov.R);
    gap = std::max(gap, (sol.sigma - ref).norm());
    return sol;
  };
  const auto scalar = StateSpaceModel::identity(1);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double q = std::pow(10.0, -2.0 + 4.0 * i / 9.0), r = std::pow(10.0, -2.0 + 4.0 * j / 9.0);
      const auto sol = record(scalar, CovariancePair{Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, r)},
                              scalar_recursion);
      const double exact = (q + std::sqrt(q * q + 4.0 * q * r)) / 2.0;
      worst_rel = std::max(worst_rel, std::abs(sol.sigma(0, 0) - exact) / exact);
    }
  }
  std::mt19937_64 rng(303);
  std::normal_distribution<double> n01;
  for (int n = 0; n < 20; ++n) {
    Matrix A(3, 3), C(2, 3), L(3, 3), N(2, 2);
    for (auto* M : {&A, &C, &L, &N})
      for (Eigen::Index i = 0; i < M->size(); ++i) M->data()[i] = n01(rng);
    A *= 0.4;
    record(StateSpaceModel{A, C},
           CovariancePair{L * L.transpose() + 0.1 * Matrix::Identity(3, 3), N * N.transpose() + 0.1 * Matrix::Identity(2, 2)},
           worst_recursion);
  }
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "scalar_rel_err=%.2e residual=%.2e recursion_gap=%.2e (scalar grid, not asserted: %.2e) unconverged=%d",
                worst_rel, worst_residual, worst_recursion, scalar_recursion, unconverged);
  return {worst_rel <= 1e-10 && worst_residual <= 1e-8 && worst_recursion <= 1e-6 && unconverged == 0, buf};
}

// Criterion 4
Outcome masking_suite(std::vector<SweepResult>& sweeps) {
  Outcome o;
  std::ostringstream detail;
  for (auto kind : {UtilityKind::Linear, UtilityKind::Quadratic}) {
    const auto cfg = ExperimentConfig::standard(kind);
    const auto probes = generate_probes(cfg);
    const auto& grid = default_epsilon_grid(
        margin_matrix(cfg.utility, probes,
                      [&] {
                        std::vector<Vector> naive;
                        for (const auto& a : probes) naive.push_back(naive_response(cfg.utility, a).beta);
                        return naive;
                      }(),
                      cfg.margin_mode)
            .maxCoeff());
    int converged = 0, bound_fail = 0, sign_fail = 0, budget_fail = 0, afriat_fail = 0, margin_up = 0;
    double prev = std::numeric_limits<double>::infinity(), last_loss = 0.0, worst_margin_gap = 0.0;
    bool monotone = true;
    std::vector<Vector> naive;
    double naive_mm = 0.0;
    for (double eps : grid) {
      const auto r = mask_responses(cfg.utility, probes, cfg.masking(eps));
      if (naive.empty()) {
        naive = r.naive_responses;
        naive_mm = max_margin(ProbeResponseDataset(probes, naive));
      }
      last_loss = r.loss;
      if (!r.converged) continue;
      ++converged;
      if (r.loss > prev + 1e-6) monotone = false;
      prev = r.loss;
      const Eigen::Index k = static_cast<Eigen::Index>(probes.size());
      for (Eigen::Index t = 0; t < k; ++t) {
        const auto& b = r.masked_responses[static_cast<std::size_t>(t)];
        if (b.minCoeff() < -1e-9) ++sign_fail;
        if (oracle::dot(probes[static_cast<std::size_t>(t)], b) > 1.0 + 1e-9) ++budget_fail;
        for (Eigen::Index s = 0; s < k; ++s)
          if (s != t && (r.margins(t, s) < -1e-6 || r.margins(t, s) > eps + 1e-6)) ++bound_fail;
      }
      std::vector<Vector> emitted = r.masked_responses;
      for (auto& b : emitted) b = b.cwiseMax(0.0);
      const ProbeResponseDataset masked(probes, emitted);
      if (!afriat_feasibility(masked)) {
        ++afriat_fail;
        continue;
      }
      const auto mm = max_margin_solution(masked);
      if (mm.margin > naive_mm + 1e-9) {
        // Check the larger margin by direct substitution: the returned (u, lambda) clears
        // every inequality by more than the naive optimum.
        const double lhs = afriat_lhs(mm.certificate, masked);
        bool lambda_ok = true;
        for (double l : mm.certificate.multipliers) lambda_ok = lambda_ok && l >= 1.0 - 1e-9 && l <= kDefaultLambdaCap + 1e-9;
        if (lambda_ok && -lhs > naive_mm + 1e-9) {
          ++margin_up;
          worst_margin_gap = std::max(worst_margin_gap, -lhs - naive_mm);
        }
      }
    }
    const bool zero_at_top = last_loss == 0.0;
    const bool ok = bound_fail == 0 && sign_fail == 0 && budget_fail == 0 && afriat_fail == 0 && monotone &&
                    zero_at_top && margin_up == 0;
    o.pass = o.pass && ok;
    char buf[400];
    std::snprintf(buf, sizeof buf,
                  "%s: converged=%d/%zu bounds=%d sign=%d budget=%d afriat=%d monotone=%d zero_at_top=%d "
                  "margin_above_naive=%d (by up to %.3g, naive %.6g); ",
                  kind == UtilityKind::Linear ? "linear" : "quadratic", converged, grid.size(), bound_fail, sign_fail,
                  budget_fail, afriat_fail, monotone ? 1 : 0, zero_at_top ? 1 : 0, margin_up, worst_margin_gap, naive_mm);
    detail << buf;
    sweeps.push_back(run_epsilon_sweep(cfg));
  }
  o.detail = detail.str();
  return o;
}

// Criterion 5
Outcome masking_oracle() {
  const std::vector<Vector> probes{vec2(0.5, 1.0), vec2(1.0, 0.25)};
  MaskingConfig cfg;
  cfg.epsilon = 1.0;
  const auto r = mask_responses(UtilityModel::linear(vec2(1, 1)), probes, cfg);
  // naive responses (2, 0) and (0, 4); lambda_t = 1 / min_i alpha_t(i) for u = b1 + b2
  const std::vector<double> naive{2, 0, 0, 4};
  const double l1 = 2.0, l2 = 4.0;
  auto f = [&](const std::vector<double>& b) {
    if (0.5 * b[0] + b[1] > 1.0 + 1e-12 || b[2] + 0.25 * b[3] > 1.0 + 1e-12) return std::nan("");
    const double m12 = (b[0] + b[1]) + l1 * (0.5 * (b[2] - b[0]) + (b[3] - b[1])) - (b[2] + b[3]);
    const double m21 = (b[2] + b[3]) + l2 * ((b[0] - b[2]) + 0.25 * (b[1] - b[3])) - (b[0] + b[1]);
    if (m12 < 0.0 || m21 < 0.0 || m12 > 1.0 || m21 > 1.0) return std::nan("");
    double loss = 0.0;
    for (int i = 0; i < 4; ++i) loss += (b[i] - naive[i]) * (b[i] - naive[i]);
    return -loss;
  };
  const auto best = oracle::grid_maximize(f, {0, 0, 0, 0}, {2, 1, 1, 4}, {0.05, 0.005, 0.0005}, {0.1, 0.01});
  const double rel = std::abs(r.loss + best.value) / -best.value;
  char buf[160];
  std::snprintf(buf, sizeof buf, "solver=%.8g oracle=%.8g rel=%.2e converged=%d", r.loss, -best.value, rel,
                r.converged ? 1 : 0);
  return {r.converged && rel <= 1e-2, buf};
}

// Criterion 6
Outcome naive_oracle() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> probe(0.2, 2.5), unit(0.0, 1.0), weight(0.5, 2.0);
  const auto log_utility = UtilityModel::custom(
      [](const Vector& b) { return std::log(1.0 + b(0)) + 2.0 * std::log(1.0 + b(1)); },
      [](const Vector& b) { return vec2(1.0 / (1.0 + b(0)), 2.0 / (1.0 + b(1))); }, 2, "log");
  int counterexamples = 0;
  for (int variant = 0; variant < 3; ++variant) {
    for (int n = 0; n < 100; ++n) {
      const Vector w = vec2(weight(rng), weight(rng));
      const UtilityModel model = variant == 0   ? UtilityModel::linear(w)
                                 : variant == 1 ? UtilityModel::quadratic(w)
                                                : log_utility;
      const Vector alpha = vec2(probe(rng), probe(rng));
      const auto best = naive_response(model, alpha).beta;
      const double top = model.value(best);
      for (int j = 0; j < 10000; ++j) {
        double x = unit(rng), y = unit(rng);
        if (x + y > 1.0) {
          x = 1.0 - x;
          y = 1.0 - y;
        }
        const Vector b = vec2(x / alpha(0), y / alpha(1));
        if (model.value(b) > top + 1e-12 * (1.0 + std::abs(top))) ++counterexamples;
      }
    }
  }
  return {counterexamples == 0, "counterexamples=" + std::to_string(counterexamples) + " over 3x100x10^4 points"};
}

// Criterion 7
Outcome figure_comparison(const std::vector<SweepResult>& sweeps) {
  Outcome o;
  o.asserted = false;
  if (sweeps.size() != 2) return {false, "sweeps unavailable", false};
  auto quad_cfg = ExperimentConfig::standard(UtilityKind::Quadratic);
  quad_cfg.epsilon_grid = sweeps[0].config.epsilon_grid;  // matched epsilon
  const auto& lin = sweeps[0];
  const auto quad = quad_cfg.epsilon_grid == sweeps[1].config.epsilon_grid ? sweeps[1] : run_epsilon_sweep(quad_cfg);
  int smaller = 0, compared = 0;
  double min_ratio = std::numeric_limits<double>::infinity(), max_ratio = 0.0;
  for (std::size_t j = 0; j < lin.rows.size(); ++j) {
    if (!(lin.rows[j].loss > 0.0)) continue;
    ++compared;
    const double ratio = lin.rows[j].loss / quad.rows[j].loss;
    min_ratio = std::min(min_ratio, ratio);
    max_ratio = std::max(max_ratio, ratio);
    if (quad.rows[j].loss < lin.rows[j].loss) ++smaller;
  }
  std::ostringstream csv;
  csv << "epsilon,loss_linear,loss_quadratic\n";
  for (std::size_t j = 0; j < lin.rows.size(); ++j)
    csv << io::format_double(lin.rows[j].epsilon) << ',' << io::format_double(lin.rows[j].loss) << ','
        << io::format_double(quad.rows[j].loss) << '\n';
  io::write_text_file("loss_curves.csv", csv.str());
  o.pass = compared > 0 && smaller == compared && min_ratio >= 5.0;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "quadratic<linear at %d/%d eps; linear/quadratic loss ratio in [%.3g, %.3g]; curves in loss_curves.csv",
                smaller, compared, min_ratio, max_ratio);
  o.detail = buf;
  return o;
}

// Criterion 8
Outcome determinism() {
  std::string first, second;
  for (auto kind : {UtilityKind::Linear, UtilityKind::Quadratic}) {
    const auto cfg = ExperimentConfig::standard(kind);
    std::ostringstream a, b;
    io::write_sweep_csv(a, run_epsilon_sweep(cfg).rows);
    io::write_sweep_csv(b, run_epsilon_sweep(cfg).rows);
    first += a.str();
    second += b.str();
  }
  return {first == second && !first.empty(), std::to_string(first.size()) + " bytes compared"};
}

}  // namespace

int main() {
  std::vector<SweepResult> sweeps;
  report(1, "garp/afriat equivalence", 5, equivalence_suite);
  report(2, "rationalization grid check", 10, rationalization_suite);
  report(3, "riccati oracle", 2, are_oracle);
  report(4, "masking suite K=50", 60, [&] { return masking_suite(sweeps); });
  report(5, "masking grid oracle K=2", 30, masking_oracle);
  report(6, "naive responder oracle", 5, naive_oracle);
  report(7, "quadratic vs linear loss", 60, [&] { return figure_comparison(sweeps); });
  report(8, "sweep determinism", 60, determinism);
  std::printf("%d asserted criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
