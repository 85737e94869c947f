#include "panelmix/stats.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>

#include "panelmix/errors.hpp"

namespace panelmix::stats {

double log_sum_exp(Eigen::Ref<const Eigen::VectorXd> x) {
  double m = kNegInf;
  for (Eigen::Index i = 0; i < x.size(); ++i) m = std::max(m, x[i]);
  if (!std::isfinite(m)) return m;  // all -inf (or an explicit +inf/nan propagates)
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > kNegInf) s += std::exp(x[i] - m);
  }
  return m + std::log(s);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

namespace {

// Acklam's rational approximation to the standard normal quantile.
double acklam(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) return -acklam(1.0 - p);
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return kNegInf;
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw InputError("normal_quantile: p outside [0,1]");
  }
  double x = acklam(p);
  // One Halley refinement against the exact cdf.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw InputError("gamma_p: invalid arguments");
  if (x == 0.0) return 0.0;
  const double lga = std::lgamma(a);
  if (x < a + 1.0) {
    // series representation
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lga);
  }
  // continued fraction for Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lga) * h;
}

double truncated_normal_logpdf(double x, double mean, double sd, double lo, double hi) {
  if (x <= lo || x >= hi) return kNegInf;
  const double z = normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
  return normal_logpdf(x, mean, sd * sd) - std::log(z);
}

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw InputError("quantile: empty sample");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

int quantile_int(std::vector<int> x, double p) {
  if (x.empty()) throw InputError("quantile_int: empty sample");
  std::sort(x.begin(), x.end());
  const auto n = x.size();
  auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  idx = std::max<std::size_t>(idx, 1) - 1;
  return x[std::min(idx, n - 1)];
}

int mode_int(const std::vector<int>& x) {
  if (x.empty()) throw InputError("mode_int: empty sample");
  std::map<int, int> counts;
  for (int v : x) ++counts[v];
  int best = x[0], best_count = -1;
  for (const auto& [value, count] : counts) {
    if (count > best_count) {  // map iterates ascending, so ties keep the smaller value
      best = value;
      best_count = count;
    }
  }
  return best;
}

double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (static_cast<double>(x.size()) - 1.0);
}

double batch_means_se(const std::vector<double>& x, int n_batches) {
  const auto n = static_cast<int>(x.size());
  n_batches = std::min(n_batches, n);
  const int bsize = n / n_batches;
  std::vector<double> bmeans;
  bmeans.reserve(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (int i = b * bsize; i < (b + 1) * bsize; ++i) s += x[i];
    bmeans.push_back(s / bsize);
  }
  return std::sqrt(variance(bmeans) / static_cast<double>(n_batches));
}

double ks_pvalue(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    p += 2.0 * sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace panelmix::stats
