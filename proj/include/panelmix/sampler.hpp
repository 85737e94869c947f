#pragma once

#include <cstdint>
#include <vector>

#include "panelmix/likelihood.hpp"
#include "panelmix/priors.hpp"
#include "panelmix/rng.hpp"
#include "panelmix/types.hpp"

namespace panelmix {

struct PriorConfig {
  KPrior k_prior;
  WeightPrior weight_prior;
  AtomPrior atom_prior;
  RegressionPrior regression_prior;
};

enum class InitRule { kPriorDraw, kKmeansWarmstart };

struct SamplerSettings {
  int n_iter = 1000;
  int n_burnin = 100;
  int thin = 1;
  double mh_step_sd = 0.5;  // random-walk scale s_v for the e0 update
  std::uint64_t seed = 0;
  InitRule init_rule = InitRule::kPriorDraw;
  int init_k = 0;  // initial component count; 0 means the prior mode
  bool store_allocations = false;
  bool adapt_mh_during_burnin = false;  // frozen after burn-in either way

  void validate() const;
};

struct ChainState {
  ModelParams params;
  Allocations alloc;
  double e0 = 1.0;  // v = e0 (static MFM) or e0/K (dynamic MFM)
  double C0 = 1.0;  // current scale hyperparameter of the sigma2 prior
  long iter = 0;

  int n_components() const { return params.n_components(); }
  int n_filled() const { return alloc.n_filled(params.n_components()); }
};

struct DrawRecord {
  long iter = 0;
  int k = 0;
  int kplus = 0;
  double gamma = 0.0;  // NaN in static mode
  Eigen::VectorXd beta;
  double e0 = 0.0;
  double v = 0.0;
  double C0 = 0.0;
  double loglik = 0.0;
  std::vector<Atom> atoms;  // length k, first kplus non-empty
  Eigen::VectorXd weights;  // length k
  Eigen::VectorXi counts;   // length k
  Eigen::VectorXi alloc;    // empty unless allocation storage is on
};

struct DrawStore {
  bool dynamic = false;
  int n_covariates = 0;
  std::vector<DrawRecord> records;

  int size() const { return static_cast<int>(records.size()); }
};

// --- Algorithm steps. Each is a full conditional update of ChainState; the
// --- residual moments must correspond to the state's current (gamma, beta).

// (1) Draw chi_i from its categorical conditional, then relabel so non-empty
// components come first (ordered by first allocated unit).
void step_allocations(ChainState& state, const ResidualMoments& moments, Rng& rng);

// (2a) Conjugate alpha | sigma2 then sigma2 | alpha for every filled component.
void step_atoms(ChainState& state, const ResidualMoments& moments, const AtomPrior& prior, Rng& rng);

// (2b) C0 | theta, Gamma-conjugate; no-op when C0 is fixed.
void step_hyper_C0(ChainState& state, const AtomPrior& prior, Rng& rng);

// (2c) Joint (gamma, beta) from the heteroskedastic Bayesian regression;
// gamma kept inside (-1,1) by rejection, with an exact univariate
// truncated-normal fallback. Skipped when the model has no regression part.
void step_regression(ChainState& state, const PanelData& data, const RegressionPrior& prior, Rng& rng);

// (3a) K | C_{K+}, N, v; shrinks the component vector to the filled prefix
// and resizes it to the new K (empty slots filled by step 4).
void step_K(ChainState& state, const KPrior& kp, const WeightPrior& wp, Rng& rng);

// (3b) Random-walk MH on log e0; identity when e0 is fixed.
void step_v(ChainState& state, const WeightPrior& wp, double step_sd, Rng& rng);

// (4) Prior atoms for the K - K+ empty components, then w ~ Dir(v + N_1, ..., v + N_K).
void step_weights_and_empties(ChainState& state, const AtomPrior& ap, const WeightPrior& wp, Rng& rng);

// One full sweep (1)-(5); returns the step-5 mixture log likelihood.
double sweep(ChainState& state, const PanelData& data, const PriorConfig& priors, double step_sd,
             Rng& rng);

ChainState init_state(const PanelData& data, const PriorConfig& priors, InitRule rule, int init_k,
                      Rng& rng);

DrawStore run_chain(const PanelData& data, const PriorConfig& priors, const SamplerSettings& settings);

}  // namespace panelmix
