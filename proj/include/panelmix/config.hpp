#pragma once

#include <optional>
#include <string>

#include "panelmix/dgp.hpp"
#include "panelmix/postprocess.hpp"
#include "panelmix/sampler.hpp"

namespace panelmix {

struct McConfig {
  int replications = 0;
  int threads = 1;
  int fit_covariates = -1;  // -1 keeps every DGP covariate in the fitted model
  bool contraction_diagnostic = false;
};

struct IdentConfig {
  post::IdentStrategy strategy = post::IdentStrategy::kOrdering;
  post::ClusterFeatures features = post::ClusterFeatures::kAlphaOnly;
};

struct PriorKplusConfig {
  std::vector<int> n_list;
  int nsim = 200000;
  std::vector<KPrior> k_priors;
  std::vector<WeightPrior> weight_priors;
};

struct RunConfig {
  bool dynamic = false;
  int lag_offset = 0;
  PriorConfig priors;
  bool atoms_auto = false;  // derive b0, B0 and the C0 scale from the data at fit time
  SamplerSettings sampler;
  std::optional<DgpConfig> dgp;
  McConfig mc;
  IdentConfig ident;
  std::optional<PriorKplusConfig> prior_kplus;
};

// Parses and schema-validates a config file; unknown keys are rejected.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Data-driven atom hyperparameters in the usual mixture style: b0 at the
// center of the unit-level outcome means, B0 their squared range, and the
// C0 prior scaled so the implied sigma2 tracks B0.
AtomPrior auto_atom_prior(const PanelData& data, const AtomPrior& base);

// Priors ready for a fit on this panel: auto atom rules applied, regression
// prior sized to the fitted covariate count.
PriorConfig resolve_priors(const RunConfig& cfg, const PanelData& data);

// The fitted view of a panel: dynamic flag per config, covariates truncated
// to the first fit_covariates columns (mc.fit_covariates).
PanelData fit_view(const PanelData& data, bool dynamic, int fit_covariates);

}  // namespace panelmix
