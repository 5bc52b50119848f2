#pragma once

#include "cogmask/dataset.hpp"

#include <functional>
#include <string>
#include <variant>

namespace cogmask {

enum class UtilityKind { Linear, Quadratic, Custom };

/// The radar's true monotone utility.
///
///   Linear     u(beta) = c'beta
///   Quadratic  u(beta) = sum_i c_i beta(i)^2
///   Custom     caller-supplied value and gradient oracles
///
/// Weights must be strictly positive. A Custom model may declare its dimension
/// (0 accepts any).
class UtilityModel {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  static UtilityModel linear(Vector weights);
  static UtilityModel quadratic(Vector weights);
  static UtilityModel custom(ValueFn value, GradientFn gradient, Eigen::Index dimension = 0,
                             std::string name = "custom");

  UtilityKind kind() const noexcept;
  std::string name() const;
  /// Declared dimension, 0 for an unconstrained Custom model.
  Eigen::Index dimension() const noexcept;
  /// Weight vector c; throws ContractError for Custom models.
  const Vector& weights() const;

  double value(const Vector& beta) const;
  Vector gradient(const Vector& beta) const;
  /// Hessian-vector product (exact for Linear/Quadratic, differenced gradient for Custom).
  Vector hessian_times(const Vector& beta, const Vector& direction) const;
  Matrix hessian(const Vector& beta) const;

  /// Degree-one homogeneous representation of the same preferences, used for
  /// multiplier margins: identity for Linear, sqrt(u) for Quadratic, the raw
  /// value for Custom.
  double homogeneous_level(const Vector& beta) const;
  Vector homogeneous_level_gradient(const Vector& beta) const;
  Matrix homogeneous_level_hessian(const Vector& beta) const;

 private:
  struct Linear {
    Vector weights;
  };
  struct Quadratic {
    Vector weights;
  };
  struct Custom {
    ValueFn value;
    GradientFn gradient;
    Eigen::Index dimension;
    std::string name;
  };

  explicit UtilityModel(std::variant<Linear, Quadratic, Custom> impl) : impl_(std::move(impl)) {}
  void check_dimension(const Vector& beta) const;

  std::variant<Linear, Quadratic, Custom> impl_;
};

double utility_value(const UtilityModel& model, const Vector& beta);
Vector utility_gradient(const UtilityModel& model, const Vector& beta);

/// Euclidean projection onto {x >= 0, alpha'x <= income}.
Vector project_onto_budget(const Vector& x, const Vector& alpha, double income = 1.0);

struct NaiveSolverOptions {
  int max_iterations = 5000;
  double tolerance = 1e-12;
  double initial_step = 1.0;
};

struct NaiveResponse {
  Vector beta;
  /// Custom models only: the ascent ended strictly inside the budget set, which a
  /// monotone utility should not do. beta is the best iterate found.
  bool stalled = false;
  int iterations = 0;
};

/// beta* = argmax u(beta) s.t. alpha'beta <= 1, beta >= 0.
///
/// Linear and Quadratic maximizers are vertices of the budget simplex, so the m
/// vertices e_i / alpha(i) and the origin are enumerated (lowest index wins ties).
/// Custom models start from the best vertex and run projected-gradient ascent with
/// backtracking, stopping when an accepted step moves less than `tolerance`.
NaiveResponse naive_response(const UtilityModel& model, const Vector& alpha, const NaiveSolverOptions& options = {});

}  // namespace cogmask
