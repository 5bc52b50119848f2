#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace cogmask {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Observed probe/response sequence {(alpha_t, beta_t)}.
///
/// Probes are strictly positive, responses nonnegative, all vectors share one
/// dimension m >= 1 and there is at least one observation. The constructor
/// enforces this and throws InputError otherwise; instances are immutable.
class ProbeResponseDataset {
 public:
  ProbeResponseDataset(std::vector<Vector> probes, std::vector<Vector> responses);

  std::size_t size() const noexcept { return probes_.size(); }
  Eigen::Index dimension() const noexcept { return probes_.front().size(); }

  const Vector& probe(std::size_t t) const { return probes_.at(t); }
  const Vector& response(std::size_t t) const { return responses_.at(t); }
  const std::vector<Vector>& probes() const noexcept { return probes_; }
  const std::vector<Vector>& responses() const noexcept { return responses_; }

  /// alpha_t' beta_s
  double expenditure(std::size_t t, std::size_t s) const { return probes_[t].dot(responses_[s]); }

  /// K x K matrix with entry (t, s) = alpha_t'(beta_s - beta_t).
  Matrix cross_cost() const;

 private:
  std::vector<Vector> probes_;
  std::vector<Vector> responses_;
};

/// Throws InputError unless every probe is finite and strictly positive with a common dimension.
void validate_probes(const std::vector<Vector>& probes);

}  // namespace cogmask
