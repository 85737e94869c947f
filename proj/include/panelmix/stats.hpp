#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace panelmix::stats {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(x))) with the usual max shift; -inf entries are skipped.
double log_sum_exp(Eigen::Ref<const Eigen::VectorXd> x);

inline double lbeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double normal_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * d * d / var;
}

// Phi(x) and its inverse (Acklam's approximation polished by one Halley step).
double normal_cdf(double x);
double normal_quantile(double p);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

inline double gamma_cdf(double x, double shape, double rate) {
  return x <= 0.0 ? 0.0 : gamma_p(shape, x * rate);
}

inline double gamma_logpdf(double x, double shape, double rate) {
  if (x <= 0.0) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double inv_gamma_logpdf(double x, double shape, double scale) {
  if (x <= 0.0) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

// Truncated-normal log density on (lo, hi), zero mass outside.
double truncated_normal_logpdf(double x, double mean, double sd, double lo, double hi);

// Empirical quantile, linear interpolation (type 7).
double quantile(std::vector<double> x, double p);

// Order-statistic quantile for integer draws (type 1), as used for K quartiles.
int quantile_int(std::vector<int> x, double p);

// Most frequent value; ties broken toward the smaller value.
int mode_int(const std::vector<int>& x);

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);

// Standard error of the mean of a correlated sequence via batch means.
double batch_means_se(const std::vector<double>& x, int n_batches = 200);

// One-sample Kolmogorov-Smirnov test against a cdf; returns the asymptotic p-value.
double ks_pvalue(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace panelmix::stats
