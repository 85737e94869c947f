#include "panelmix/rng.hpp"

#include <cmath>

#include "panelmix/errors.hpp"
#include "panelmix/stats.hpp"

namespace panelmix {

double Rng::gamma(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0) throw InputError("gamma: shape and rate must be positive");
  if (shape < 1.0) {
    const double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double Rng::log_gamma(double shape) {
  if (shape >= 0.1) return std::log(gamma(shape, 1.0));
  // log G(a) = log G(a+1) + log(U)/a, no underflow for tiny a
  const double u = uniform();
  return std::log(gamma(shape + 1.0, 1.0)) + std::log(u) / shape;
}

long Rng::poisson(double lambda) {
  if (lambda < 0.0) throw InputError("poisson: negative rate");
  if (lambda == 0.0) return 0;
  if (lambda < 30.0) {
    // Knuth product method
    const double limit = std::exp(-lambda);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }
  // PTRS transformed rejection (Hormann 1993)
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        kf * std::log(lambda) - lambda - std::lgamma(kf + 1.0)) {
      return static_cast<long>(kf);
    }
  }
}

double Rng::truncated_normal(double mean, double sd, double lo, double hi) {
  const double a = stats::normal_cdf((lo - mean) / sd);
  const double b = stats::normal_cdf((hi - mean) / sd);
  if (!(b > a)) throw NumericError("truncated_normal: vanishing truncation mass");
  const double u = a + (b - a) * uniform();
  double x = mean + sd * stats::normal_quantile(u);
  // inverse-cdf can land on a bound after rounding
  return std::clamp(x, std::nextafter(lo, hi), std::nextafter(hi, lo));
}

Eigen::VectorXd Rng::dirichlet(Eigen::Ref<const Eigen::VectorXd> concentration) {
  const auto k = concentration.size();
  Eigen::VectorXd logs(k);
  for (Eigen::Index i = 0; i < k; ++i) logs[i] = log_gamma(concentration[i]);
  const double lse = stats::log_sum_exp(logs);
  Eigen::VectorXd w(k);
  for (Eigen::Index i = 0; i < k; ++i) w[i] = std::exp(logs[i] - lse);
  return w;
}

int Rng::categorical_logits(Eigen::Ref<const Eigen::VectorXd> logw) {
  const double lse = stats::log_sum_exp(logw);
  if (!std::isfinite(lse)) throw NumericError("categorical_logits: no finite weight");
  const double u = uniform();
  double cum = 0.0;
  int last_valid = 0;
  for (Eigen::Index i = 0; i < logw.size(); ++i) {
    if (logw[i] == stats::kNegInf) continue;
    cum += std::exp(logw[i] - lse);
    last_valid = static_cast<int>(i);
    if (u <= cum) return static_cast<int>(i);
  }
  return last_valid;
}

int Rng::categorical(Eigen::Ref<const Eigen::VectorXd> probs) {
  const double u = uniform() * probs.sum();
  double cum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u <= cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

std::uint64_t Rng::split(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace panelmix
