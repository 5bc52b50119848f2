#include "cogmask/utility.hpp"

#include "cogmask/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace cogmask {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Vector checked_weights(Vector w) {
  if (w.size() < 1) throw InputError("utility weights must be nonempty");
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (!std::isfinite(w(i)) || w(i) <= 0.0) throw InputError("utility weights must be finite and > 0");
  return w;
}

}  // namespace

UtilityModel UtilityModel::linear(Vector weights) { return UtilityModel(Linear{checked_weights(std::move(weights))}); }

UtilityModel UtilityModel::quadratic(Vector weights) {
  return UtilityModel(Quadratic{checked_weights(std::move(weights))});
}

UtilityModel UtilityModel::custom(ValueFn value, GradientFn gradient, Eigen::Index dimension, std::string name) {
  if (!value || !gradient) throw InputError("custom utility needs both value and gradient oracles");
  if (dimension < 0) throw InputError("custom utility dimension must be >= 0");
  return UtilityModel(Custom{std::move(value), std::move(gradient), dimension, std::move(name)});
}

UtilityKind UtilityModel::kind() const noexcept {
  return std::visit(overloaded{[](const Linear&) { return UtilityKind::Linear; },
                               [](const Quadratic&) { return UtilityKind::Quadratic; },
                               [](const Custom&) { return UtilityKind::Custom; }},
                    impl_);
}

std::string UtilityModel::name() const {
  return std::visit(overloaded{[](const Linear&) { return std::string("linear"); },
                               [](const Quadratic&) { return std::string("quadratic"); },
                               [](const Custom& c) { return c.name; }},
                    impl_);
}

Eigen::Index UtilityModel::dimension() const noexcept {
  return std::visit(overloaded{[](const Linear& l) { return l.weights.size(); },
                               [](const Quadratic& q) { return q.weights.size(); },
                               [](const Custom& c) { return c.dimension; }},
                    impl_);
}

const Vector& UtilityModel::weights() const {
  if (const auto* l = std::get_if<Linear>(&impl_)) return l->weights;
  if (const auto* q = std::get_if<Quadratic>(&impl_)) return q->weights;
  throw ContractError("custom utility models have no weight vector");
}

void UtilityModel::check_dimension(const Vector& beta) const {
  const Eigen::Index m = dimension();
  if (m != 0 && beta.size() != m) {
    throw InputError("utility expects dimension " + std::to_string(m) + ", got " + std::to_string(beta.size()));
  }
}

double UtilityModel::value(const Vector& beta) const {
  check_dimension(beta);
  return std::visit(overloaded{[&](const Linear& l) { return l.weights.dot(beta); },
                               [&](const Quadratic& q) { return q.weights.dot(beta.cwiseAbs2()); },
                               [&](const Custom& c) { return c.value(beta); }},
                    impl_);
}

Vector UtilityModel::gradient(const Vector& beta) const {
  check_dimension(beta);
  return std::visit(overloaded{[&](const Linear& l) -> Vector { return l.weights; },
                               [&](const Quadratic& q) -> Vector { return 2.0 * q.weights.cwiseProduct(beta); },
                               [&](const Custom& c) -> Vector {
                                 Vector g = c.gradient(beta);
                                 if (g.size() != beta.size()) throw InputError("custom gradient has wrong dimension");
                                 return g;
                               }},
                    impl_);
}

Vector UtilityModel::hessian_times(const Vector& beta, const Vector& direction) const {
  check_dimension(beta);
  return std::visit(overloaded{[&](const Linear&) -> Vector { return Vector::Zero(beta.size()); },
                               [&](const Quadratic& q) -> Vector {
                                 return 2.0 * q.weights.cwiseProduct(direction);
                               },
                               [&](const Custom& c) -> Vector {
                                 const double h = 1e-6;
                                 return (c.gradient(beta + h * direction) - c.gradient(beta - h * direction)) /
                                        (2.0 * h);
                               }},
                    impl_);
}

Matrix UtilityModel::hessian(const Vector& beta) const {
  check_dimension(beta);
  if (const auto* q = std::get_if<Quadratic>(&impl_)) return Matrix(2.0 * q->weights.asDiagonal());
  if (kind() == UtilityKind::Linear) return Matrix::Zero(beta.size(), beta.size());
  Matrix h(beta.size(), beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) h.col(j) = hessian_times(beta, Vector::Unit(beta.size(), j));
  return 0.5 * (h + h.transpose());
}

double UtilityModel::homogeneous_level(const Vector& beta) const {
  if (kind() == UtilityKind::Quadratic) return std::sqrt(value(beta));
  return value(beta);
}

Vector UtilityModel::homogeneous_level_gradient(const Vector& beta) const {
  if (const auto* q = std::get_if<Quadratic>(&impl_)) {
    check_dimension(beta);
    const double v = std::sqrt(q->weights.dot(beta.cwiseAbs2()));
    if (v == 0.0) return Vector::Zero(beta.size());
    return q->weights.cwiseProduct(beta) / v;
  }
  return gradient(beta);
}

Matrix UtilityModel::homogeneous_level_hessian(const Vector& beta) const {
  if (const auto* q = std::get_if<Quadratic>(&impl_)) {
    check_dimension(beta);
    const double v = std::sqrt(q->weights.dot(beta.cwiseAbs2()));
    if (v == 0.0) return Matrix::Zero(beta.size(), beta.size());
    const Vector g = q->weights.cwiseProduct(beta) / v;
    return (Matrix(q->weights.asDiagonal()) - g * g.transpose()) / v;
  }
  return hessian(beta);
}

double utility_value(const UtilityModel& model, const Vector& beta) { return model.value(beta); }

Vector utility_gradient(const UtilityModel& model, const Vector& beta) { return model.gradient(beta); }

Vector project_onto_budget(const Vector& x, const Vector& alpha, double income) {
  Vector y = x.cwiseMax(0.0);
  if (alpha.dot(y) <= income) return y;
  // Find tau > 0 with sum_i alpha_i max(0, x_i - tau alpha_i) = income; breakpoints at x_i / alpha_i.
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) > 0.0) idx.push_back(i);
  std::sort(idx.begin(), idx.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x(a) / alpha(a) > x(b) / alpha(b); });
  double sum_ax = 0.0, sum_aa = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const Eigen::Index i = idx[j];
    sum_ax += alpha(i) * x(i);
    sum_aa += alpha(i) * alpha(i);
    tau = (sum_ax - income) / sum_aa;
    const double next_break = (j + 1 < idx.size()) ? x(idx[j + 1]) / alpha(idx[j + 1]) : 0.0;
    if (tau >= next_break) break;
  }
  return (x - tau * alpha).cwiseMax(0.0);
}

NaiveResponse naive_response(const UtilityModel& model, const Vector& alpha, const NaiveSolverOptions& options) {
  validate_probes({alpha});
  const Eigen::Index m = alpha.size();
  if (model.dimension() != 0 && model.dimension() != m) {
    throw InputError("probe dimension " + std::to_string(m) + " does not match utility dimension " +
                     std::to_string(model.dimension()));
  }

  NaiveResponse out;
  double best_value = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector v = Vector::Zero(m);
    v(i) = 1.0 / alpha(i);
    const double val = model.value(v);
    if (val > best_value) {
      best_value = val;
      out.beta = v;
    }
  }
  const Vector origin = Vector::Zero(m);
  if (model.value(origin) > best_value) {
    best_value = model.value(origin);
    out.beta = origin;
  }
  if (model.kind() != UtilityKind::Custom) return out;

  // Projected-gradient ascent from the best vertex.
  Vector beta = out.beta;
  double value = best_value;
  double step = options.initial_step;
  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    const Vector g = model.gradient(beta);
    bool accepted = false;
    Vector candidate;
    double cand_value = value;
    for (int bt = 0; bt < 60; ++bt) {
      candidate = project_onto_budget(beta + step * g, alpha);
      cand_value = model.value(candidate);
      // sufficient increase along the projected arc
      if (cand_value >= value + 1e-4 * g.dot(candidate - beta)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double moved = (candidate - beta).norm();
    beta = candidate;
    value = cand_value;
    step = std::min(step * 2.0, 1e6);
    if (moved < options.tolerance) break;
  }
  out.beta = beta;
  out.stalled = alpha.dot(beta) < 1.0 - 1e-9;
  return out;
}

}  // namespace cogmask
