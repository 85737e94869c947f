#include "panelmix/kmeans.hpp"

#include <cmath>
#include <limits>

#include "panelmix/errors.hpp"

namespace panelmix {

KmeansResult kmeans(const Eigen::MatrixXd& x, int k, int restarts, Rng& rng) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < k) throw InputError("kmeans: fewer points than clusters");

  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();

  Eigen::VectorXd dist2(n);
  for (int rep = 0; rep < restarts; ++rep) {
    // k-means++ seeding
    Eigen::MatrixXd centers(k, d);
    centers.row(0) = x.row(static_cast<Eigen::Index>(rng.uniform() * n) % n);
    for (Eigen::Index i = 0; i < n; ++i) dist2[i] = (x.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double total = dist2.sum();
      Eigen::Index pick = 0;
      if (total > 0.0) {
        const double u = rng.uniform() * total;
        double cum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          cum += dist2[i];
          if (u <= cum) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<Eigen::Index>(rng.uniform() * n) % n;
      }
      centers.row(c) = x.row(pick);
      for (Eigen::Index i = 0; i < n; ++i)
        dist2[i] = std::min(dist2[i], (x.row(i) - centers.row(c)).squaredNorm());
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        int arg = 0;
        double bestd = (x.row(i) - centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
          const double dc = (x.row(i) - centers.row(c)).squaredNorm();
          if (dc < bestd) {
            bestd = dc;
            arg = c;
          }
        }
        if (assign[i] != arg) {
          assign[i] = arg;
          changed = true;
        }
      }
      if (!changed && iter > 0) break;
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
      Eigen::VectorXi cnt = Eigen::VectorXi::Zero(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(assign[i]) += x.row(i);
        ++cnt[assign[i]];
      }
      for (int c = 0; c < k; ++c) {
        if (cnt[c] > 0) {
          centers.row(c) = sums.row(c) / cnt[c];
        } else {
          // revive an empty cluster at the farthest point
          Eigen::Index far = 0;
          double fard = -1.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double di = (x.row(i) - centers.row(assign[i])).squaredNorm();
            if (di > fard) {
              fard = di;
              far = i;
            }
          }
          centers.row(c) = x.row(far);
        }
      }
    }
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) inertia += (x.row(i) - centers.row(assign[i])).squaredNorm();
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.centers = centers;
      best.assign = assign;
    }
  }
  return best;
}

double silhouette(const Eigen::MatrixXd& x, const std::vector<int>& assign, int k) {
  const auto n = x.rows();
  if (k < 2) throw InputError("silhouette: need at least two clusters");
  double total = 0.0;
  Eigen::VectorXi cnt = Eigen::VectorXi::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) ++cnt[assign[i]];
  Eigen::VectorXd dsum(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    dsum.setZero();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      dsum[assign[j]] += (x.row(i) - x.row(j)).norm();
    }
    const int ci = assign[i];
    const double a = cnt[ci] > 1 ? dsum[ci] / (cnt[ci] - 1) : 0.0;
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == ci || cnt[c] == 0) continue;
      b = std::min(b, dsum[c] / cnt[c]);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace panelmix
