#pragma once

#include "support.hpp"

#include "shapekit/convert.hpp"

#include <vector>

namespace testing {

// p sample points, each a random barycentric mix of three vertices.
inline shapekit::PointRegressor random_regressor(shapekit::Rng& rng, int p, int K) {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < p; ++i) {
    double w[3], sum = 0.0;
    for (double& x : w) sum += (x = rng.uniform(0.05, 1.0));
    for (int c = 0; c < 3; ++c)
      t.emplace_back(i, static_cast<int>(rng.below(static_cast<std::uint64_t>(K))), w[c] / sum);
  }
  shapekit::PointRegressor r;
  r.H.resize(p, K);
  r.H.setFromTriplets(t.begin(), t.end());
  return r;
}

inline shapekit::PointRegressor identity_regressor(int p) {
  shapekit::PointRegressor r;
  r.H.resize(p, p);
  r.H.setIdentity();
  return r;
}

}  // namespace testing
