#include "cogmask/masking.hpp"

#include "cogmask/errors.hpp"
#include "cogmask/quadratic_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cogmask {

const char* to_string(MarginMode mode) noexcept {
  switch (mode) {
    case MarginMode::MultiplierMargin: return "multiplier";
    case MarginMode::RawMultiplierMargin: return "multiplier_raw";
    case MarginMode::ConcavitySlack: return "concavity_slack";
    case MarginMode::LiteralGradient: return "literal_gradient";
  }
  return "unknown";
}

MarginMode margin_mode_from_string(std::string_view text) {
  if (text == "multiplier") return MarginMode::MultiplierMargin;
  if (text == "multiplier_raw") return MarginMode::RawMultiplierMargin;
  if (text == "concavity_slack") return MarginMode::ConcavitySlack;
  if (text == "literal_gradient") return MarginMode::LiteralGradient;
  throw InputError("unknown margin mode '" + std::string(text) +
                   "' (expected multiplier, multiplier_raw, concavity_slack or literal_gradient)");
}

void SolverOptions::validate() const {
  if (max_outer_iterations <= 0 || max_inner_iterations <= 0) throw InputError("solver iteration limits must be positive");
  if (!(step_size > 0.0) || !(initial_penalty > 0.0) || !(tolerance > 0.0)) {
    throw InputError("solver step size, penalty and tolerance must be positive");
  }
  if (!(penalty_growth > 1.0)) throw InputError("solver penalty growth must exceed 1");
}

void MaskingConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InputError("epsilon must be finite and >= 0");
  solver.validate();
}

MarginEvaluator::MarginEvaluator(UtilityModel model, std::vector<Vector> probes, MarginMode mode)
    : model_(std::move(model)), probes_(std::move(probes)), mode_(mode) {
  validate_probes(probes_);
  naive_.reserve(probes_.size());
  for (const auto& a : probes_) naive_.push_back(naive_response(model_, a).beta);
  if (mode_ == MarginMode::MultiplierMargin || mode_ == MarginMode::RawMultiplierMargin) {
    lambda_.reserve(probes_.size());
    for (std::size_t t = 0; t < probes_.size(); ++t) {
      const Vector g = point(naive_[t], false).gradient;
      lambda_.push_back(g.cwiseQuotient(probes_[t]).maxCoeff());
    }
  }
}

MarginEvaluator::Point MarginEvaluator::point(const Vector& beta, bool with_hessian) const {
  Point p;
  p.beta = beta;
  if (mode_ == MarginMode::MultiplierMargin) {
    p.value = model_.homogeneous_level(beta);
    p.gradient = model_.homogeneous_level_gradient(beta);
    if (with_hessian) p.hessian = model_.homogeneous_level_hessian(beta);
  } else {
    p.value = model_.value(beta);
    p.gradient = model_.gradient(beta);
    if (with_hessian) p.hessian = model_.hessian(beta);
  }
  return p;
}

double MarginEvaluator::margin(std::size_t t, const Point& pt, const Point& ps) const {
  switch (mode_) {
    case MarginMode::MultiplierMargin:
    case MarginMode::RawMultiplierMargin:
      return pt.value + lambda_[t] * probes_[t].dot(ps.beta - pt.beta) - ps.value;
    case MarginMode::ConcavitySlack:
      return pt.value + pt.gradient.dot(ps.beta - pt.beta) - ps.value;
    case MarginMode::LiteralGradient:
      return ps.value - pt.value + pt.gradient.dot(ps.beta - pt.beta);
  }
  return 0.0;
}

void MarginEvaluator::margin_gradient(std::size_t t, const Point& pt, const Point& ps, Vector& d_t,
                                      Vector& d_s) const {
  switch (mode_) {
    case MarginMode::MultiplierMargin:
    case MarginMode::RawMultiplierMargin:
      d_t = pt.gradient - lambda_[t] * probes_[t];
      d_s = lambda_[t] * probes_[t] - ps.gradient;
      return;
    case MarginMode::ConcavitySlack:
      d_t = model_.hessian_times(pt.beta, ps.beta - pt.beta);
      d_s = pt.gradient - ps.gradient;
      return;
    case MarginMode::LiteralGradient:
      d_t = model_.hessian_times(pt.beta, ps.beta - pt.beta) - 2.0 * pt.gradient;
      d_s = ps.gradient + pt.gradient;
      return;
  }
}

void MarginEvaluator::margin_hessian(const Point& pt, const Point& ps, Matrix& h_tt, Matrix& h_ts,
                                     Matrix& h_ss) const {
  if (pt.hessian.size() == 0 || ps.hessian.size() == 0) throw ContractError("margin_hessian needs points with Hessians");
  switch (mode_) {
    case MarginMode::MultiplierMargin:
    case MarginMode::RawMultiplierMargin:
      h_tt = pt.hessian;
      h_ts = Matrix::Zero(pt.beta.size(), ps.beta.size());
      h_ss = -ps.hessian;
      return;
    case MarginMode::ConcavitySlack:
      h_tt = -pt.hessian;
      h_ts = pt.hessian;
      h_ss = -ps.hessian;
      return;
    case MarginMode::LiteralGradient:
      h_tt = -3.0 * pt.hessian;
      h_ts = pt.hessian;
      h_ss = ps.hessian;
      return;
  }
}

double MarginEvaluator::margin(std::size_t t, std::size_t s, const Vector& bt, const Vector& bs) const {
  if (t == s) return 0.0;
  return margin(t, point(bt, false), point(bs, false));
}

void MarginEvaluator::margin_gradient(std::size_t t, std::size_t s, const Vector& bt, const Vector& bs, Vector& d_t,
                                      Vector& d_s) const {
  if (t == s) {
    d_t = Vector::Zero(bt.size());
    d_s = Vector::Zero(bs.size());
    return;
  }
  margin_gradient(t, point(bt, false), point(bs, false), d_t, d_s);
}

Matrix MarginEvaluator::matrix(const std::vector<Vector>& responses) const {
  if (responses.size() != probes_.size()) throw InputError("margin matrix: probes and responses differ in length");
  for (const auto& b : responses) {
    if (b.size() != probes_.front().size()) throw InputError("margin matrix: response dimension mismatch");
    if (b.minCoeff() < 0.0) throw InputError("margin matrix: responses must be nonnegative");
  }
  std::vector<Point> pts;
  pts.reserve(size());
  for (const auto& b : responses) pts.push_back(point(b, false));
  const auto k = static_cast<Eigen::Index>(size());
  Matrix out = Matrix::Zero(k, k);
  for (std::size_t t = 0; t < size(); ++t)
    for (std::size_t s = 0; s < size(); ++s)
      if (s != t) out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = margin(t, pts[t], pts[s]);
  return out;
}

Matrix margin_matrix(const UtilityModel& model, const std::vector<Vector>& probes, const std::vector<Vector>& responses,
                     MarginMode mode) {
  return MarginEvaluator(model, probes, mode).matrix(responses);
}

namespace {

// The program over the stacked perturbation x = (eta_1, ..., eta_K). All constraints
// are written g(x) <= 0 in the order: (M - eps, -M) per ordered pair, -(b*_t + eta_t)
// per coordinate, then alpha_t'(b*_t + eta_t) - 1 per observation when budgets apply.
class MaskingProblem {
 public:
  MaskingProblem(const MarginEvaluator& eval, const MaskingConfig& config)
      : eval_(eval), cfg_(config), k_(eval.size()), m_(eval.probes().front().size()) {}

  Eigen::Index variables() const { return static_cast<Eigen::Index>(k_) * m_; }
  Eigen::Index offset(std::size_t t) const { return static_cast<Eigen::Index>(t) * m_; }
  Eigen::Index constraint_count() const {
    return static_cast<Eigen::Index>(2 * k_ * (k_ - 1)) + variables() +
           (cfg_.enforce_budget ? static_cast<Eigen::Index>(k_) : 0);
  }

  std::vector<MarginEvaluator::Point> points(const Vector& x, bool with_hessian) const {
    std::vector<MarginEvaluator::Point> pts;
    pts.reserve(k_);
    for (std::size_t t = 0; t < k_; ++t)
      pts.push_back(eval_.point(eval_.naive_responses()[t] + x.segment(offset(t), m_), with_hessian));
    return pts;
  }

  Vector constraints(const Vector& x) const {
    const auto pts = points(x, false);
    Vector g(constraint_count());
    Eigen::Index r = 0;
    for (std::size_t t = 0; t < k_; ++t)
      for (std::size_t s = 0; s < k_; ++s) {
        if (s == t) continue;
        const double mts = eval_.margin(t, pts[t], pts[s]);
        g(r++) = mts - cfg_.epsilon;
        g(r++) = -mts;
      }
    for (std::size_t t = 0; t < k_; ++t)
      for (Eigen::Index i = 0; i < m_; ++i) g(r++) = -pts[t].beta(i);
    if (cfg_.enforce_budget)
      for (std::size_t t = 0; t < k_; ++t) g(r++) = eval_.probes()[t].dot(pts[t].beta) - 1.0;
    return g;
  }

  double violation(const Vector& x) const {
    if (constraint_count() == 0) return 0.0;
    return std::max(0.0, constraints(x).maxCoeff());
  }

  // Constraints G x <= h; exact when the margins are affine in the responses.
  void linearised(const Vector& xc, Matrix& G, Vector& h) const {
    const auto pts = points(xc, false);
    G = Matrix::Zero(constraint_count(), variables());
    h = Vector::Zero(constraint_count());
    Eigen::Index r = 0;
    Vector dt, ds;
    for (std::size_t t = 0; t < k_; ++t) {
      for (std::size_t s = 0; s < k_; ++s) {
        if (s == t) continue;
        const double mts = eval_.margin(t, pts[t], pts[s]);
        eval_.margin_gradient(t, pts[t], pts[s], dt, ds);
        const double base = mts - dt.dot(xc.segment(offset(t), m_)) - ds.dot(xc.segment(offset(s), m_));
        G.block(r, offset(t), 1, m_) = dt.transpose();
        G.block(r, offset(s), 1, m_) = ds.transpose();
        h(r++) = cfg_.epsilon - base;
        G.block(r, offset(t), 1, m_) = -dt.transpose();
        G.block(r, offset(s), 1, m_) = -ds.transpose();
        h(r++) = base;
      }
    }
    for (std::size_t t = 0; t < k_; ++t)
      for (Eigen::Index i = 0; i < m_; ++i) {
        G(r, offset(t) + i) = -1.0;
        h(r++) = eval_.naive_responses()[t](i);
      }
    if (cfg_.enforce_budget)
      for (std::size_t t = 0; t < k_; ++t) {
        G.block(r, offset(t), 1, m_) = eval_.probes()[t].transpose();
        h(r++) = 1.0 - eval_.probes()[t].dot(eval_.naive_responses()[t]);
      }
  }

  // Powell-Hestenes-Rockafellar augmented Lagrangian
  //   ||x||^2 + 1/(2 rho) sum_k (max(0, mu_k + rho g_k)^2 - mu_k^2)
  // with its gradient and generalised Hessian when requested.
  double lagrangian(const Vector& x, const Vector& mu, double rho, Vector* grad, Matrix* hess) const {
    const Eigen::Index n = variables();
    const auto pts = points(x, hess != nullptr);
    double f = x.squaredNorm();
    if (grad) *grad = 2.0 * x;
    if (hess) *hess = 2.0 * Matrix::Identity(n, n);
    auto term = [&](Eigen::Index k, double g) {
      const double a = std::max(0.0, mu(k) + rho * g);
      f += (a * a - mu(k) * mu(k)) / (2.0 * rho);
      return a;
    };

    Eigen::Index k = 0;
    Vector dt, ds;
    Matrix htt, hts, hss;
    for (std::size_t t = 0; t < k_; ++t) {
      for (std::size_t s = 0; s < k_; ++s) {
        if (s == t) continue;
        const double mts = eval_.margin(t, pts[t], pts[s]);
        const double up = term(k, mts - cfg_.epsilon);
        const double lo = term(k + 1, -mts);
        k += 2;
        if (!grad || (up == 0.0 && lo == 0.0)) continue;
        eval_.margin_gradient(t, pts[t], pts[s], dt, ds);
        const double coef = up - lo;
        grad->segment(offset(t), m_) += coef * dt;
        grad->segment(offset(s), m_) += coef * ds;
        if (!hess) continue;
        const double w = rho * ((up > 0.0 ? 1.0 : 0.0) + (lo > 0.0 ? 1.0 : 0.0));
        hess->block(offset(t), offset(t), m_, m_) += w * dt * dt.transpose();
        hess->block(offset(t), offset(s), m_, m_) += w * dt * ds.transpose();
        hess->block(offset(s), offset(t), m_, m_) += w * ds * dt.transpose();
        hess->block(offset(s), offset(s), m_, m_) += w * ds * ds.transpose();
        if (coef != 0.0) {
          eval_.margin_hessian(pts[t], pts[s], htt, hts, hss);
          hess->block(offset(t), offset(t), m_, m_) += coef * htt;
          hess->block(offset(t), offset(s), m_, m_) += coef * hts;
          hess->block(offset(s), offset(t), m_, m_) += coef * hts.transpose();
          hess->block(offset(s), offset(s), m_, m_) += coef * hss;
        }
      }
    }
    for (std::size_t t = 0; t < k_; ++t)
      for (Eigen::Index i = 0; i < m_; ++i, ++k) {
        const double a = term(k, -pts[t].beta(i));
        if (a > 0.0 && grad) (*grad)(offset(t) + i) -= a;
        if (a > 0.0 && hess) (*hess)(offset(t) + i, offset(t) + i) += rho;
      }
    if (cfg_.enforce_budget)
      for (std::size_t t = 0; t < k_; ++t, ++k) {
        const Vector& alpha = eval_.probes()[t];
        const double a = term(k, alpha.dot(pts[t].beta) - 1.0);
        if (a > 0.0 && grad) grad->segment(offset(t), m_) += a * alpha;
        if (a > 0.0 && hess) hess->block(offset(t), offset(t), m_, m_) += rho * alpha * alpha.transpose();
      }
    return f;
  }

 private:
  const MarginEvaluator& eval_;
  const MaskingConfig& cfg_;
  std::size_t k_;
  Eigen::Index m_;
};

struct SolveOutcome {
  Vector x;
  bool converged = false;
  int iterations = 0;
};

SolveOutcome solve_affine(const MaskingProblem& problem, double tol) {
  SolveOutcome out;
  Matrix G;
  Vector h;
  problem.linearised(Vector::Zero(problem.variables()), G, h);
  const qp::Solution sol = qp::solve_min_norm(G, h);
  out.x = sol.x;
  out.iterations = sol.iterations;
  out.converged = sol.status == qp::Status::Optimal && problem.violation(out.x) <= tol;
  return out;
}

// Damped Newton on one augmented-Lagrangian subproblem, stopped at gradient norm
// gtol or when the line search stops making progress. Indefinite Hessians are
// shifted by a multiple of the identity until the Cholesky factorisation succeeds.
int newton(const MaskingProblem& problem, Vector& x, const Vector& mu, double rho, double gtol,
           const SolverOptions& opt) {
  constexpr double kArmijo = 1e-4;
  const Eigen::Index n = problem.variables();
  Vector grad;
  Matrix hess;
  int it = 0;
  for (; it < opt.max_inner_iterations; ++it) {
    const double f = problem.lagrangian(x, mu, rho, &grad, &hess);
    if (grad.lpNorm<Eigen::Infinity>() <= gtol) break;

    Vector d;
    const double scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    for (double shift = 0.0;; shift = shift == 0.0 ? 1e-10 * scale : shift * 10.0) {
      Eigen::LLT<Matrix> llt(hess + shift * Matrix::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        d = llt.solve(-grad);
        if (grad.dot(d) < 0.0) break;
      }
      if (shift > 1e12 * scale) {
        d = -grad;
        break;
      }
    }
    if (d.lpNorm<Eigen::Infinity>() <= 1e-2 * opt.tolerance) break;

    const double slope = grad.dot(d);
    double step = std::min(1.0, opt.step_size);
    bool accepted = false;
    double f_new = f;
    for (int bt = 0; bt < 60; ++bt) {
      const Vector trial = x + step * d;
      f_new = problem.lagrangian(trial, mu, rho, nullptr, nullptr);
      if (f_new <= f + kArmijo * step * slope) {
        x = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || f - f_new <= 1e-15 * std::abs(f)) break;
  }
  return it;
}

SolveOutcome solve_augmented_lagrangian(const MaskingProblem& problem, const SolverOptions& opt) {
  SolveOutcome out;
  Vector x = Vector::Zero(problem.variables());
  const Eigen::Index nc = problem.constraint_count();
  Vector mu = Vector::Zero(nc);
  double rho = opt.initial_penalty;
  double prev_measure = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < opt.max_outer_iterations; ++outer) {
    const Vector x_prev = x;
    // subproblems are solved loosely at first and tighter as the multipliers settle
    const double gtol = std::max(1e-2 * opt.tolerance, std::min(1e-2, 1e-2 * prev_measure));
    out.iterations += newton(problem, x, mu, rho, gtol, opt);
    const Vector g = problem.constraints(x);
    double measure = 0.0;
    for (Eigen::Index k = 0; k < nc; ++k) measure = std::max(measure, std::abs(std::min(-g(k), mu(k) / rho)));
    mu = (mu + rho * g).cwiseMax(0.0);
    const double viol = nc == 0 ? 0.0 : std::max(0.0, g.maxCoeff());
    if (viol < opt.tolerance && (x - x_prev).lpNorm<Eigen::Infinity>() < opt.tolerance) {
      out.converged = true;
      break;
    }
    if (measure > 0.25 * prev_measure) rho = std::min(rho * opt.penalty_growth, 1e10);
    prev_measure = measure;
  }
  out.x = std::move(x);
  return out;
}

}  // namespace

MaskingResult mask_responses(const UtilityModel& model, const std::vector<Vector>& probes, const MaskingConfig& config) {
  config.validate();
  const MarginEvaluator eval(model, probes, config.margin_mode);
  const MaskingProblem problem(eval, config);

  const bool affine = model.kind() == UtilityKind::Linear;
  const SolveOutcome sol = affine ? solve_affine(problem, config.solver.tolerance)
                                  : solve_augmented_lagrangian(problem, config.solver);

  MaskingResult result;
  result.method = affine ? "active_set_qp" : "augmented_lagrangian";
  result.naive_responses = eval.naive_responses();
  result.iterations = sol.iterations;
  const std::size_t k = probes.size();
  const Eigen::Index m = probes.front().size();
  Vector x = sol.x;
  result.eta.resize(k);
  result.masked_responses.resize(k);
  for (std::size_t t = 0; t < k; ++t) {
    const Vector& naive = result.naive_responses[t];
    for (Eigen::Index i = 0; i < m; ++i) {
      double& e = x(static_cast<Eigen::Index>(t) * m + i);
      // round-off below zero lands exactly on the boundary
      if (naive(i) + e < 0.0 && naive(i) + e > -config.solver.tolerance) e = -naive(i);
    }
    result.eta[t] = x.segment(static_cast<Eigen::Index>(t) * m, m);
    result.masked_responses[t] = naive + result.eta[t];
  }
  result.max_violation = problem.violation(x);
  result.converged = sol.converged && result.max_violation <= config.solver.tolerance;
  std::vector<Vector> clipped = result.masked_responses;
  for (auto& b : clipped) b = b.cwiseMax(0.0);
  result.margins = eval.matrix(clipped);
  result.loss = performance_loss(result);
  return result;
}

double performance_loss(const MaskingResult& result) {
  double loss = 0.0;
  for (const auto& e : result.eta) loss += e.squaredNorm();
  return loss;
}

}  // namespace cogmask
