#pragma once

#include <Eigen/Dense>
#include <vector>

#include "panelmix/rng.hpp"

namespace panelmix {

struct KmeansResult {
  Eigen::MatrixXd centers;  // k x d
  std::vector<int> assign;
  double inertia = 0.0;
};

// Lloyd with k-means++ seeding, best of `restarts` runs.
KmeansResult kmeans(const Eigen::MatrixXd& x, int k, int restarts, Rng& rng);

double silhouette(const Eigen::MatrixXd& x, const std::vector<int>& assign, int k);

}  // namespace panelmix
