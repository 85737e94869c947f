#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "panelmix/rng.hpp"

namespace panelmix {

// Gamma hyperprior, always stored in shape/rate form. Config files must say
// explicitly whether they supply a rate or a scale.
struct GammaHyper {
  double shape = 1.0;
  double rate = 1.0;
};

// Prior on the number of mixture components K. All translated variants put
// their stated law on K - 1 so that K >= 1; Degenerate pins K itself.
struct KPrior {
  enum class Kind { kBnb, kTranslatedPoisson, kGeometric, kTranslatedNegBin, kUniformRange, kDegenerate };

  Kind kind = Kind::kBnb;
  double a_lambda = 1.0, a_pi = 4.0, b_pi = 3.0;  // beta-negative-binomial on K-1
  double lambda = 1.0;                            // Poisson rate on K-1
  double q = 0.5;                                 // geometric success probability
  double r = 1.0, p = 0.5;                        // negative binomial size/probability on K-1
  int lo = 0, hi = 0;                             // uniform bounds on K-1
  int k0 = 1;                                     // degenerate value of K

  static KPrior bnb(double a_lambda, double a_pi, double b_pi);
  static KPrior translated_poisson(double lambda);
  static KPrior geometric(double q);
  static KPrior translated_negbin(double r, double p);
  static KPrior uniform_range(int lo, int hi);
  static KPrior degenerate(int k0);

  void validate() const;

  // Largest K with positive mass, or -1 when the support is unbounded.
  int support_max() const;
};

// log P(K = k); -inf outside the support.
double log_pmf_K(const KPrior& kp, int k);

// Cached inverse-cdf sampler over a KPrior, extended lazily.
class KPriorTable {
 public:
  explicit KPriorTable(const KPrior& kp);
  int sample(Rng& rng);
  int mode();

 private:
  void extend();
  KPrior kp_;
  std::vector<double> cum_;  // cum_[k-1] = P(K <= k)
};

// Dirichlet concentration specification: static MFM keeps v = e0, dynamic
// MFM scales it as v = e0 / K. e0 is fixed or Gamma-distributed.
struct WeightPrior {
  enum class Mode { kStatic, kDynamic };
  Mode mode = Mode::kStatic;
  bool e0_fixed = true;
  double e0 = 1.0;  // the fixed value (ignored when e0 is random)
  GammaHyper e0_prior{1.0, 20.0};

  double concentration(double e0_value, int n_components) const {
    return mode == Mode::kStatic ? e0_value : e0_value / n_components;
  }

  void validate() const;
};

// theta_k | phi ~ N(b0, B0) x IG(c0, C0), with C0 optionally Gamma-distributed.
struct AtomPrior {
  double b0 = 0.0;
  double B0 = 1.0;
  double c0 = 2.5;
  bool C0_fixed = false;
  double C0 = 1.0;  // fixed value, or the chain's initial value when random
  GammaHyper C0_prior{0.5, 0.5};

  void validate() const;
};

// (gamma, beta) ~ N(gamma0, Gamma0; -1, 1) x N_p(beta0, Omega0).
struct RegressionPrior {
  double gamma0 = 0.0;
  double Gamma0 = 1.0;
  Eigen::VectorXd beta0;
  Eigen::MatrixXd Omega0;

  void validate(int p) const;
};

// log probability of a labeled partition with the given non-empty cluster
// sizes: K!/(K-k)! Gamma(vK)/Gamma(vK+N) prod_j Gamma(N_j+v)/Gamma(v).
// Returns -inf when K < k.
double log_eppf(const Eigen::VectorXi& counts, int n_components, double v);

// Draw K >= K+ from Pi(K | C_{K+}, N, v) by enumerating the unnormalized
// tail until it falls below 1e-12 of the running mass (hard cap 1e4 terms).
// In dynamic mode v = e0/K varies with the candidate.
int sample_K_conditional(const KPrior& kp, const Eigen::VectorXi& counts, const WeightPrior& wp,
                         double e0, Rng& rng);

// log prior density of the e0 hyperparameter; 0/-inf in fixed mode.
double log_density_e0(double e0, const WeightPrior& wp);

// Monte Carlo estimate of E[K+ | N] under the full prior. The exact
// combinatorial sum over compositions of N is intractable past toy sizes,
// so a forward simulator stands in for it.
double induced_kplus_mean(const KPrior& kp, const WeightPrior& wp, int n_units, int nsim, Rng& rng);

// Tail-ratio check Pi(K=k+1|N)/Pi(K=k|N) <= c3 N^{-A} for all k <= kmax,
// the decay condition consistency arguments place on the K prior.
bool check_k_tail_ratio(const KPrior& kp, int n_units, double A, double c3, int kmax);

}  // namespace panelmix
