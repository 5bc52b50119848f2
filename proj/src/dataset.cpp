#include "cogmask/dataset.hpp"

#include "cogmask/errors.hpp"

#include <cmath>
#include <string>

namespace cogmask {

void validate_probes(const std::vector<Vector>& probes) {
  if (probes.empty()) throw InputError("at least one probe is required");
  const Eigen::Index m = probes.front().size();
  if (m < 1) throw InputError("probe dimension must be at least 1");
  for (std::size_t t = 0; t < probes.size(); ++t) {
    if (probes[t].size() != m) {
      throw InputError("probe " + std::to_string(t + 1) + " has dimension " +
                       std::to_string(probes[t].size()) + ", expected " + std::to_string(m));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = probes[t](i);
      if (!std::isfinite(v) || v <= 0.0) {
        throw InputError("probe " + std::to_string(t + 1) + " entry " + std::to_string(i + 1) +
                         " must be finite and > 0");
      }
    }
  }
}

ProbeResponseDataset::ProbeResponseDataset(std::vector<Vector> probes, std::vector<Vector> responses)
    : probes_(std::move(probes)), responses_(std::move(responses)) {
  validate_probes(probes_);
  if (responses_.size() != probes_.size()) {
    throw InputError("dataset has " + std::to_string(probes_.size()) + " probes but " +
                     std::to_string(responses_.size()) + " responses");
  }
  const Eigen::Index m = dimension();
  for (std::size_t t = 0; t < responses_.size(); ++t) {
    if (responses_[t].size() != m) {
      throw InputError("response " + std::to_string(t + 1) + " has dimension " +
                       std::to_string(responses_[t].size()) + ", expected " + std::to_string(m));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = responses_[t](i);
      if (!std::isfinite(v) || v < 0.0) {
        throw InputError("response " + std::to_string(t + 1) + " entry " + std::to_string(i + 1) +
                         " must be finite and >= 0");
      }
    }
  }
}

Matrix ProbeResponseDataset::cross_cost() const {
  const auto k = static_cast<Eigen::Index>(size());
  Matrix a(k, k);
  for (Eigen::Index t = 0; t < k; ++t) {
    const double own = expenditure(t, t);
    for (Eigen::Index s = 0; s < k; ++s) a(t, s) = (s == t) ? 0.0 : expenditure(t, s) - own;
  }
  return a;
}

}  // namespace cogmask
