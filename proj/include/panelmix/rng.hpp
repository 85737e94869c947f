#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace panelmix {

// All stochastic code draws through this wrapper so that a (seed, stream)
// pair pins the full output bit-for-bit. Parallel work units must take
// split streams, never share one Rng.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // U(0,1), never exactly 0
  double uniform() {
    double u;
    do {
      u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    } while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar method; the antithetic mate is discarded.
  double normal() {
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  // Marsaglia-Tsang; shapes below one via the boost G(a) = G(a+1) U^{1/a}.
  double gamma(double shape, double rate);

  // log of a Gamma(shape, 1) draw, stable for very small shapes.
  double log_gamma(double shape);

  // sigma2 ~ IG(shape, scale), i.e. 1/Gamma(shape, rate = scale)
  double inv_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }

  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }

  long poisson(double lambda);

  // Inverse-cdf draw on (lo, hi); adequate away from extreme tails.
  double truncated_normal(double mean, double sd, double lo, double hi);

  Eigen::VectorXd dirichlet(Eigen::Ref<const Eigen::VectorXd> concentration);

  // 0-based index from unnormalized log weights, single uniform inversion.
  int categorical_logits(Eigen::Ref<const Eigen::VectorXd> logw);

  // 0-based index from probabilities summing to ~1.
  int categorical(Eigen::Ref<const Eigen::VectorXd> probs);

  std::uint64_t raw() { return gen_(); }

  // SplitMix64-style stream derivation; documented seeding rule for
  // replications and worker threads.
  static std::uint64_t split(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 gen_;
};

}  // namespace panelmix
