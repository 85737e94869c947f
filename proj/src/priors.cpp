#include "panelmix/priors.hpp"

#include <cmath>

#include "panelmix/errors.hpp"
#include "panelmix/stats.hpp"

namespace panelmix {

using stats::kNegInf;

KPrior KPrior::bnb(double a_lambda, double a_pi, double b_pi) {
  KPrior kp;
  kp.kind = Kind::kBnb;
  kp.a_lambda = a_lambda;
  kp.a_pi = a_pi;
  kp.b_pi = b_pi;
  kp.validate();
  return kp;
}

KPrior KPrior::translated_poisson(double lambda) {
  KPrior kp;
  kp.kind = Kind::kTranslatedPoisson;
  kp.lambda = lambda;
  kp.validate();
  return kp;
}

KPrior KPrior::geometric(double q) {
  KPrior kp;
  kp.kind = Kind::kGeometric;
  kp.q = q;
  kp.validate();
  return kp;
}

KPrior KPrior::translated_negbin(double r, double p) {
  KPrior kp;
  kp.kind = Kind::kTranslatedNegBin;
  kp.r = r;
  kp.p = p;
  kp.validate();
  return kp;
}

KPrior KPrior::uniform_range(int lo, int hi) {
  KPrior kp;
  kp.kind = Kind::kUniformRange;
  kp.lo = lo;
  kp.hi = hi;
  kp.validate();
  return kp;
}

KPrior KPrior::degenerate(int k0) {
  KPrior kp;
  kp.kind = Kind::kDegenerate;
  kp.k0 = k0;
  kp.validate();
  return kp;
}

void KPrior::validate() const {
  switch (kind) {
    case Kind::kBnb:
      if (a_lambda <= 0 || a_pi <= 0 || b_pi <= 0) throw InputError("k prior: BNB parameters must be positive");
      break;
    case Kind::kTranslatedPoisson:
      if (lambda <= 0) throw InputError("k prior: Poisson rate must be positive");
      break;
    case Kind::kGeometric:
      if (!(q > 0 && q < 1)) throw InputError("k prior: geometric q must lie in (0,1)");
      break;
    case Kind::kTranslatedNegBin:
      if (r <= 0 || !(p > 0 && p < 1)) throw InputError("k prior: negbin needs r > 0 and p in (0,1)");
      break;
    case Kind::kUniformRange:
      if (lo < 0 || hi < lo) throw InputError("k prior: uniform range needs 0 <= lo <= hi");
      break;
    case Kind::kDegenerate:
      if (k0 < 1) throw InputError("k prior: degenerate K must be >= 1");
      break;
  }
}

int KPrior::support_max() const {
  switch (kind) {
    case Kind::kUniformRange:
      return hi + 1;
    case Kind::kDegenerate:
      return k0;
    default:
      return -1;
  }
}

double log_pmf_K(const KPrior& kp, int k) {
  if (k < 1) return kNegInf;
  const double m = k - 1;
  switch (kp.kind) {
    case KPrior::Kind::kBnb:
      return std::lgamma(kp.a_lambda + m) + stats::lbeta(kp.a_lambda + kp.a_pi, m + kp.b_pi) -
             std::lgamma(kp.a_lambda) - stats::lbeta(kp.a_pi, kp.b_pi) - std::lgamma(m + 1.0);
    case KPrior::Kind::kTranslatedPoisson:
      return m * std::log(kp.lambda) - kp.lambda - std::lgamma(m + 1.0);
    case KPrior::Kind::kGeometric:
      return m * std::log1p(-kp.q) + std::log(kp.q);
    case KPrior::Kind::kTranslatedNegBin:
      return std::lgamma(m + kp.r) - std::lgamma(kp.r) - std::lgamma(m + 1.0) +
             kp.r * std::log(kp.p) + m * std::log1p(-kp.p);
    case KPrior::Kind::kUniformRange:
      return (m >= kp.lo && m <= kp.hi) ? -std::log(static_cast<double>(kp.hi - kp.lo + 1)) : kNegInf;
    case KPrior::Kind::kDegenerate:
      return k == kp.k0 ? 0.0 : kNegInf;
  }
  return kNegInf;
}

KPriorTable::KPriorTable(const KPrior& kp) : kp_(kp) {}

void KPriorTable::extend() {
  const auto k = static_cast<int>(cum_.size()) + 1;
  const int bound = kp_.support_max();
  const double prev = cum_.empty() ? 0.0 : cum_.back();
  if ((bound > 0 && k > bound) || cum_.size() > 10'000'000) {
    cum_.push_back(prev);  // exhausted support; freeze the tail
    return;
  }
  cum_.push_back(prev + std::exp(log_pmf_K(kp_, k)));
}

int KPriorTable::sample(Rng& rng) {
  const double u = rng.uniform();
  std::size_t k = 0;
  while (true) {
    if (k >= cum_.size()) extend();
    if (cum_[k] >= u) return static_cast<int>(k) + 1;
    if (k > 0 && cum_[k] == cum_[k - 1] && cum_[k] > 1.0 - 1e-9) return static_cast<int>(k);
    ++k;
  }
}

int KPriorTable::mode() {
  int best = 1;
  double best_lp = log_pmf_K(kp_, 1);
  std::size_t k = 0;
  while (true) {
    if (k >= cum_.size()) extend();
    const double lp = log_pmf_K(kp_, static_cast<int>(k) + 1);
    if (lp > best_lp) {
      best_lp = lp;
      best = static_cast<int>(k) + 1;
    }
    if (cum_[k] > 1.0 - 1e-9) return best;
    ++k;
  }
}

void WeightPrior::validate() const {
  if (e0_fixed) {
    if (!(e0 > 0)) throw InputError("weight prior: fixed e0 must be positive");
  } else if (!(e0_prior.shape > 0) || !(e0_prior.rate > 0)) {
    throw InputError("weight prior: e0 hyperprior parameters must be positive");
  }
}

void AtomPrior::validate() const {
  if (!(B0 > 0) || !(c0 > 0)) throw InputError("atom prior: B0 and c0 must be positive");
  if (C0_fixed) {
    if (!(C0 > 0)) throw InputError("atom prior: fixed C0 must be positive");
  } else if (!(C0_prior.shape > 0) || !(C0_prior.rate > 0)) {
    throw InputError("atom prior: C0 hyperprior parameters must be positive");
  }
}

void RegressionPrior::validate(int p) const {
  if (!(Gamma0 > 0)) throw InputError("regression prior: Gamma0 must be positive");
  if (beta0.size() != p) throw InputError("regression prior: beta0 length != p");
  if (Omega0.rows() != p || Omega0.cols() != p) throw InputError("regression prior: Omega0 must be p x p");
  if (p > 0) {
    if (!Omega0.isApprox(Omega0.transpose(), 1e-10))
      throw InputError("regression prior: Omega0 must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(Omega0);
    if (llt.info() != Eigen::Success) throw InputError("regression prior: Omega0 must be positive definite");
  }
}

double log_eppf(const Eigen::VectorXi& counts, int n_components, double v) {
  const auto k = static_cast<int>(counts.size());
  if (k < 1) throw InputError("log_eppf: empty counts");
  if (!(v > 0)) throw InputError("log_eppf: concentration must be positive");
  int n = 0;
  for (int j = 0; j < k; ++j) {
    if (counts[j] < 1) throw InputError("log_eppf: cluster sizes must be >= 1");
    n += counts[j];
  }
  if (n_components < k) return kNegInf;

  double lp = std::lgamma(n_components + 1.0) - std::lgamma(n_components - k + 1.0);
  lp += std::lgamma(v * n_components) - std::lgamma(v * n_components + n);
  for (int j = 0; j < k; ++j) lp += std::lgamma(counts[j] + v) - std::lgamma(v);
  return lp;
}

int sample_K_conditional(const KPrior& kp, const Eigen::VectorXi& counts, const WeightPrior& wp,
                         double e0, Rng& rng) {
  const auto kplus = static_cast<int>(counts.size());
  if (kplus < 1) throw InputError("sample_K_conditional: need at least one cluster");

  constexpr int kMaxTerms = 10'000;
  constexpr double kTailTol = 1e-12;
  const double log_tail_tol = std::log(kTailTol);
  const int bound = kp.support_max();

  std::vector<double> logw;
  logw.reserve(64);
  double lse = kNegInf;
  double prev = kNegInf;
  bool converged = false;

  for (int K = kplus; static_cast<int>(logw.size()) < kMaxTerms; ++K) {
    if (bound > 0 && K > bound) {
      converged = true;
      break;
    }
    const double v = wp.concentration(e0, K);
    const double lw = log_pmf_K(kp, K) + log_eppf(counts, K, v);
    logw.push_back(lw);
    if (lw > kNegInf) {
      lse = lse == kNegInf ? lw : std::max(lse, lw) + std::log1p(std::exp(-std::fabs(lse - lw)));
    }
    if (lw < prev && lw - lse < log_tail_tol) {
      converged = true;
      break;
    }
    prev = lw;
  }
  if (lse == kNegInf)
    throw NumericError("sample_K_conditional: zero support (K prior puts no mass on K >= K+)");
  if (!converged)
    throw NumericError("sample_K_conditional: tail not converged after 1e4 terms; mass at cap boundary");

  const double u = rng.uniform();
  double cum = 0.0;
  int last = kplus;
  for (std::size_t j = 0; j < logw.size(); ++j) {
    if (logw[j] == kNegInf) continue;
    cum += std::exp(logw[j] - lse);
    last = kplus + static_cast<int>(j);
    if (u <= cum) return last;
  }
  return last;
}

double log_density_e0(double e0, const WeightPrior& wp) {
  if (!(e0 > 0)) return kNegInf;
  if (wp.e0_fixed) return e0 == wp.e0 ? 0.0 : kNegInf;
  return stats::gamma_logpdf(e0, wp.e0_prior.shape, wp.e0_prior.rate);
}

double induced_kplus_mean(const KPrior& kp, const WeightPrior& wp, int n_units, int nsim, Rng& rng) {
  if (nsim < 1) throw InputError("induced_kplus_mean: nsim must be >= 1");
  KPriorTable table(kp);
  double total = 0.0;
  std::vector<char> seen;
  for (int s = 0; s < nsim; ++s) {
    const double e0 = wp.e0_fixed ? wp.e0 : rng.gamma(wp.e0_prior.shape, wp.e0_prior.rate);
    const int K = table.sample(rng);
    const double v = wp.concentration(e0, K);
    const Eigen::VectorXd w = rng.dirichlet(Eigen::VectorXd::Constant(K, v));
    seen.assign(K, 0);
    int filled = 0;
    for (int i = 0; i < n_units; ++i) {
      const int k = rng.categorical(w);
      if (!seen[k]) {
        seen[k] = 1;
        if (++filled == K) break;
      }
    }
    total += filled;
  }
  return total / nsim;
}

bool check_k_tail_ratio(const KPrior& kp, int n_units, double A, double c3, int kmax) {
  if (!(A > 0) || !(c3 > 0)) throw InputError("check_k_tail_ratio: A and c3 must be positive");
  const double bound = c3 * std::pow(static_cast<double>(n_units), -A);
  for (int k = 1; k <= kmax; ++k) {
    const double lp_next = log_pmf_K(kp, k + 1);
    if (lp_next == kNegInf) continue;  // zero mass above never violates the bound
    const double lp = log_pmf_K(kp, k);
    if (lp == kNegInf) return false;  // mass reappears after a gap: ratio is infinite
    if (std::exp(lp_next - lp) > bound * (1.0 + 1e-12)) return false;
  }
  return true;
}

}  // namespace panelmix
