#include "cogmask/errors.hpp"
#include "cogmask/masking.hpp"
#include "cogmask/revealed_preference.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace cogmask;
using fixtures::vec;

namespace {

std::vector<Vector> fixture_probes() { return {vec({0.5, 1}), vec({1, 0.25})}; }

// Independent scalar evaluation of the multiplier margin for weights (1, 1):
// level v(b) = b1 + b2 (linear) or sqrt(b1^2 + b2^2) (quadratic), lambda_t from the
// best vertex e_i / a_t(i).
struct ScalarMargins {
  bool quadratic;

  double level(double b1, double b2) const { return quadratic ? std::sqrt(b1 * b1 + b2 * b2) : b1 + b2; }
  double lambda(const Vector& a) const {
    // vertex value 1/a_i for both models; gradient of v there is e_i, so lambda = 1 / a_i at the best vertex
    const int i = (1.0 / a(0) >= 1.0 / a(1)) ? 0 : 1;
    return 1.0 / a(i);
  }
  double margin(const Vector& at, double bt1, double bt2, double bs1, double bs2) const {
    return level(bt1, bt2) + lambda(at) * (at(0) * (bs1 - bt1) + at(1) * (bs2 - bt2)) - level(bs1, bs2);
  }
};

// Grid search over both responses inside their budget boxes; returns the smallest
// perturbation loss with 0 <= M <= eps and budgets respected.
double grid_oracle_loss(bool quadratic, double eps) {
  const auto probes = fixture_probes();
  const ScalarMargins sm{quadratic};
  const std::vector<double> naive{2, 0, 0, 4};
  auto f = [&](const std::vector<double>& b) {
    const Vector& a1 = probes[0];
    const Vector& a2 = probes[1];
    if (a1(0) * b[0] + a1(1) * b[1] > 1.0 + 1e-12 || a2(0) * b[2] + a2(1) * b[3] > 1.0 + 1e-12) return std::nan("");
    const double m12 = sm.margin(a1, b[0], b[1], b[2], b[3]);
    const double m21 = sm.margin(a2, b[2], b[3], b[0], b[1]);
    if (m12 < 0.0 || m21 < 0.0 || m12 > eps || m21 > eps) return std::nan("");
    double loss = 0.0;
    for (int i = 0; i < 4; ++i) loss += (b[i] - naive[i]) * (b[i] - naive[i]);
    return -loss;
  };
  const auto best = oracle::grid_maximize(f, {0, 0, 0, 0}, {2, 1, 1, 4}, {0.05, 0.005, 0.0005}, {0.1, 0.01});
  return -best.value;
}

void check_feasible(const MaskingResult& r, const std::vector<Vector>& probes, double eps, double tol) {
  for (std::size_t t = 0; t < probes.size(); ++t) {
    CHECK(r.masked_responses[t].minCoeff() >= -tol);
    CHECK(probes[t].dot(r.masked_responses[t]) <= 1.0 + tol);
    CHECK((r.masked_responses[t] - r.naive_responses[t] - r.eta[t]).norm() <= 1e-14 * (1.0 + r.naive_responses[t].norm()));
    for (std::size_t s = 0; s < probes.size(); ++s) {
      if (s == t) continue;
      const double m = r.margins(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s));
      CHECK(m >= -tol);
      CHECK(m <= eps + tol);
    }
  }
}

}  // namespace

TEST_CASE("margin mode names") {
  for (auto mode : {MarginMode::MultiplierMargin, MarginMode::RawMultiplierMargin, MarginMode::ConcavitySlack,
                    MarginMode::LiteralGradient})
    CHECK(margin_mode_from_string(to_string(mode)) == mode);
  CHECK_THROWS_AS(margin_mode_from_string("sideways"), InputError);
}

TEST_CASE("margin matrix examples") {
  const auto lin = UtilityModel::linear(vec({1, 1}));
  const auto probes = fixture_probes();
  const std::vector<Vector> responses{vec({2, 0}), vec({0, 4})};

  const Matrix M = margin_matrix(lin, probes, responses, MarginMode::MultiplierMargin);
  CHECK(M(0, 0) == 0.0);
  CHECK(M(1, 1) == 0.0);
  // lambda_1 = max(1/0.5, 1/1) = 2: 2 + 2 * (0.5*0 + 1*4 - 0.5*2 - 0) - 4 = 4
  const double hand = 2.0 + 2.0 * ((0.5 * 0 + 1 * 4) - (0.5 * 2 + 1 * 0)) - 4.0;
  CHECK(hand == 4.0);
  CHECK(M(0, 1) == doctest::Approx(hand));
  const ScalarMargins sm{false};
  CHECK(M(1, 0) == doctest::Approx(sm.margin(probes[1], 0, 4, 2, 0)));

  const Matrix S = margin_matrix(lin, probes, responses, MarginMode::ConcavitySlack);
  CHECK(S.cwiseAbs().maxCoeff() == 0.0);

  const MarginEvaluator ev(lin, probes, MarginMode::MultiplierMargin);
  CHECK(ev.multipliers()[0] == doctest::Approx(2.0));
  CHECK(ev.multipliers()[1] == doctest::Approx(4.0));
}

TEST_CASE("quadratic multiplier margins use the homogeneous level") {
  const auto quad = UtilityModel::quadratic(vec({1, 1}));
  const auto probes = fixture_probes();
  const std::vector<Vector> responses{vec({0.7, 0.4}), vec({0.3, 2.1})};
  const Matrix M = margin_matrix(quad, probes, responses, MarginMode::MultiplierMargin);
  const ScalarMargins sm{true};
  CHECK(M(0, 1) == doctest::Approx(sm.margin(probes[0], 0.7, 0.4, 0.3, 2.1)));
  CHECK(M(1, 0) == doctest::Approx(sm.margin(probes[1], 0.3, 2.1, 0.7, 0.4)));

  // the other modes on raw u = b1^2 + b2^2
  auto u = [](const Vector& b) { return b.squaredNorm(); };
  auto g = [](const Vector& b) { return Vector(2.0 * b); };
  const Vector bt = responses[0], bs = responses[1];
  const Matrix C = margin_matrix(quad, probes, responses, MarginMode::ConcavitySlack);
  CHECK(C(0, 1) == doctest::Approx(u(bt) + g(bt).dot(bs - bt) - u(bs)));
  const Matrix L = margin_matrix(quad, probes, responses, MarginMode::LiteralGradient);
  CHECK(L(0, 1) == doctest::Approx(u(bs) - u(bt) + g(bt).dot(bs - bt)));
}

TEST_CASE("margin gradients and Hessians against finite differences") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.2, 2.5), b(0.05, 1.5);
  for (auto mode : {MarginMode::MultiplierMargin, MarginMode::RawMultiplierMargin, MarginMode::ConcavitySlack,
                    MarginMode::LiteralGradient}) {
    for (int trial = 0; trial < 10; ++trial) {
      const std::vector<Vector> probes{vec({u(rng), u(rng)}), vec({u(rng), u(rng)})};
      const MarginEvaluator ev(UtilityModel::quadratic(vec({1.0, 2.0})), probes, mode);
      const Vector bt = vec({b(rng), b(rng)}), bs = vec({b(rng), b(rng)});
      Vector dt, ds;
      ev.margin_gradient(0, 1, bt, bs, dt, ds);
      const Vector fdt = oracle::finite_difference_gradient([&](const Vector& x) { return ev.margin(0, 1, x, bs); }, bt);
      const Vector fds = oracle::finite_difference_gradient([&](const Vector& x) { return ev.margin(0, 1, bt, x); }, bs);
      CHECK((dt - fdt).norm() <= 1e-6);
      CHECK((ds - fds).norm() <= 1e-6);

      Matrix htt, hts, hss;
      ev.margin_hessian(ev.point(bt, true), ev.point(bs, true), htt, hts, hss);
      for (Eigen::Index j = 0; j < 2; ++j) {
        const Vector e = 1e-6 * Vector::Unit(2, j);
        Vector dtp, dsp, dtm, dsm;
        ev.margin_gradient(0, 1, bt + e, bs, dtp, dsp);
        ev.margin_gradient(0, 1, bt - e, bs, dtm, dsm);
        CHECK((htt.col(j) - (dtp - dtm) / 2e-6).norm() <= 1e-5);
        CHECK((hts.row(j).transpose() - (dsp - dsm) / 2e-6).norm() <= 1e-5);
        ev.margin_gradient(0, 1, bt, bs + e, dtp, dsp);
        ev.margin_gradient(0, 1, bt, bs - e, dtm, dsm);
        CHECK((hss.col(j) - (dsp - dsm) / 2e-6).norm() <= 1e-5);
      }
    }
  }
}

TEST_CASE("performance loss") {
  MaskingResult r;
  CHECK(performance_loss(r) == 0.0);
  r.eta = {vec({0.1, 0}), vec({0, 0.2})};
  CHECK(performance_loss(r) == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("trivial masking instances") {
  const auto lin = UtilityModel::linear(vec({1, 1}));
  const auto quad = UtilityModel::quadratic(vec({1, 1}));
  MaskingConfig cfg;
  cfg.epsilon = 0.3;
  for (const auto* model : {&lin, &quad}) {
    const auto one = mask_responses(*model, {vec({0.7, 1.1})}, cfg);
    CHECK(one.converged);
    CHECK(one.loss == 0.0);
    CHECK(one.eta[0].norm() == 0.0);

    // epsilon above every naive margin: nothing to do
    MaskingConfig wide;
    wide.epsilon = 6.0;  // naive margins are 4 and 6
    const auto r = mask_responses(*model, fixture_probes(), wide);
    CHECK(r.converged);
    CHECK(r.loss == 0.0);
    CHECK(r.masked_responses[0] == vec({2, 0}));
    CHECK(r.masked_responses[1] == vec({0, 4}));
  }
  cfg.epsilon = -1.0;
  CHECK_THROWS_AS(mask_responses(lin, fixture_probes(), cfg), InputError);
}

TEST_CASE("K=2 linear masking matches the grid-search oracle") {
  MaskingConfig cfg;
  cfg.epsilon = 1.0;
  const auto r = mask_responses(UtilityModel::linear(vec({1, 1})), fixture_probes(), cfg);
  REQUIRE(r.converged);
  CHECK(r.method == "active_set_qp");
  CHECK(r.loss > 0.0);
  check_feasible(r, fixture_probes(), 1.0, 1e-8);
  const double oracle_loss = grid_oracle_loss(false, 1.0);
  CHECK(r.loss == doctest::Approx(oracle_loss).epsilon(1e-2));
  CHECK(r.loss <= oracle_loss + 1e-9);  // the grid cannot beat the exact optimum
}

TEST_CASE("K=2 quadratic masking matches the grid-search oracle") {
  for (double eps : {0.1, 1.0, 3.0}) {
    MaskingConfig cfg;
    cfg.epsilon = eps;
    const auto r = mask_responses(UtilityModel::quadratic(vec({1, 1})), fixture_probes(), cfg);
    REQUIRE(r.converged);
    CHECK(r.method == "augmented_lagrangian");
    check_feasible(r, fixture_probes(), eps, 1e-8);
    const double oracle_loss = grid_oracle_loss(true, eps);
    CHECK(r.loss == doctest::Approx(oracle_loss).epsilon(1e-2));
  }
}

TEST_CASE("random instances: feasibility, monotone loss, rationality kept") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.2, 2.5);
  const std::vector<double> grid{0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0};
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<Vector> probes;
    for (int t = 0; t < 6; ++t) probes.push_back(vec({u(rng), u(rng)}));
    for (const auto& model : {UtilityModel::linear(vec({1, 1})), UtilityModel::quadratic(vec({1, 1}))}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double eps : grid) {
        MaskingConfig cfg;
        cfg.epsilon = eps;
        const auto r = mask_responses(model, probes, cfg);
        CHECK(r.loss == doctest::Approx(performance_loss(r)).epsilon(1e-12));
        if (!r.converged) continue;
        check_feasible(r, probes, eps, 1e-8);
        CHECK(r.loss <= prev + 1e-6);
        prev = r.loss;
        std::vector<Vector> emitted = r.masked_responses;
        for (auto& b : emitted) b = b.cwiseMax(0.0);
        CHECK(afriat_feasibility(ProbeResponseDataset(probes, emitted)));
      }
    }
  }
}

TEST_CASE("budget can be switched off") {
  MaskingConfig cfg;
  cfg.epsilon = 0.5;
  cfg.enforce_budget = false;
  const auto free = mask_responses(UtilityModel::linear(vec({1, 1})), fixture_probes(), cfg);
  cfg.enforce_budget = true;
  const auto tied = mask_responses(UtilityModel::linear(vec({1, 1})), fixture_probes(), cfg);
  REQUIRE(free.converged);
  REQUIRE(tied.converged);
  CHECK(free.loss <= tied.loss + 1e-12);
}

TEST_CASE("an exhausted solver reports non-convergence with its violation") {
  MaskingConfig cfg;
  cfg.epsilon = 0.1;
  cfg.solver.max_outer_iterations = 1;
  cfg.solver.max_inner_iterations = 1;
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.2, 2.5);
  std::vector<Vector> probes;
  for (int t = 0; t < 8; ++t) probes.push_back(vec({u(rng), u(rng)}));
  const auto r = mask_responses(UtilityModel::quadratic(vec({1, 1})), probes, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.max_violation > cfg.solver.tolerance);
}
