#pragma once

#include "cogmask/dataset.hpp"

namespace fixtures {

inline cogmask::Vector vec(std::initializer_list<double> xs) {
  cogmask::Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// alpha_1=(2,1), beta_1=(1,0), alpha_2=(1,2), beta_2=(0,1): each choice is strictly
// cheaper at the other's prices.
inline cogmask::ProbeResponseDataset garp_violating() {
  return {{vec({2, 1}), vec({1, 2})}, {vec({1, 0}), vec({0, 1})}};
}

// Responses maximize beta(1)+beta(2) under alpha'beta <= 1; no revealed-preference edges.
inline cogmask::ProbeResponseDataset consistent_pair() {
  return {{vec({0.5, 1}), vec({1, 0.25})}, {vec({2, 0}), vec({0, 4})}};
}

}  // namespace fixtures
