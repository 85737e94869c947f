#pragma once

#include <cstdint>
#include <optional>

#include "panelmix/rng.hpp"
#include "panelmix/types.hpp"

namespace panelmix {

enum class Y0Rule { kZero, kStationaryDraw, kUserVector };

struct DgpConfig {
  ModelParams true_params;
  int n_units = 50;
  int n_periods = 3;
  double covariate_mean = 1.0;
  double covariate_sd = 1.0;
  Y0Rule y0_rule = Y0Rule::kStationaryDraw;
  Eigen::VectorXd y0_user;  // only read under kUserVector
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulatedPanel {
  PanelData data;
  Allocations alloc;
};

// Draw chi ~ categorical(w), covariates ~ N(mean, sd^2), then run the outcome
// recursion y_t = gamma y_{t-1} + beta'z_t + alpha_i + u_t. Covariates come
// out pre-aligned (lag_offset = 0).
SimulatedPanel simulate_panel(const DgpConfig& cfg);

// The measure actually realized in the sample: atoms with N_k > 0, weights
// renormalized.
MixingMeasure realized_measure(const Allocations& alloc, const ModelParams& params);

}  // namespace panelmix
