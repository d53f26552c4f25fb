#pragma once

#include <Eigen/Dense>
#include <random>

#include "rawgrl/netmodel.hpp"
#include "rawgrl/rng.hpp"

namespace testutil {

inline Eigen::MatrixXd random_weights(int n, rawgrl::Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd W(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) W(i, j) = i == j ? 0.0 : u(rng);
  }
  return W;
}

inline Eigen::MatrixXd random_matrix(int r, int c, rawgrl::Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = u(rng);
  return M;
}

inline rawgrl::ScenarioConfig small_scenario(int users, int groups) {
  rawgrl::ScenarioConfig cfg;
  cfg.num_users = users;
  cfg.num_groups = groups;
  return cfg;
}

}  // namespace testutil
