#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace panelmix {

// One support point of the mixing measure: a latent group's intercept
// and noise variance.
struct Atom {
  double alpha = 0.0;
  double sigma2 = 1.0;
};

// Balanced panel. y is stored T x N (column = unit) so the per-unit time
// loop is cache-linear. Covariates are stored pre-shifted: z[i].row(t-1)
// already holds the regressor entering the outcome at period t; the lag
// offset h is kept as metadata only.
struct PanelData {
  Eigen::MatrixXd y;              // T x N outcomes
  Eigen::VectorXd y0;             // length N initial conditions (dynamic mode)
  std::vector<Eigen::MatrixXd> z; // N matrices of size T x p
  int lag_offset = 0;             // h
  bool dynamic = false;           // lagged outcome present

  int n_periods() const { return static_cast<int>(y.rows()); }
  int n_units() const { return static_cast<int>(y.cols()); }
  int n_covariates() const { return z.empty() ? 0 : static_cast<int>(z.front().cols()); }

  void validate() const;
};

// Atomic mixing measure: atoms need not be distinct (that is a property of
// the true measure only), weights live on the simplex.
struct MixingMeasure {
  std::vector<Atom> atoms;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(atoms.size()); }
  void validate() const;
};

// zeta = {gamma, beta, theta_K, w_K, K}; gamma is absent in static mode.
struct ModelParams {
  std::optional<double> gamma;
  Eigen::VectorXd beta;
  std::vector<Atom> atoms;
  Eigen::VectorXd weights;

  int n_components() const { return static_cast<int>(atoms.size()); }

  MixingMeasure measure() const { return MixingMeasure{atoms, weights}; }

  void validate() const;
};

// Latent labels chi_i in 1..K.
struct Allocations {
  Eigen::VectorXi chi;

  int n_units() const { return static_cast<int>(chi.size()); }

  // Cluster sizes N_k for k = 1..K.
  Eigen::VectorXi counts(int n_components) const;

  // Number of non-empty components.
  int n_filled(int n_components) const;
};

}  // namespace panelmix
