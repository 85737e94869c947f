#pragma once

#include <Eigen/Dense>
#include <optional>

#include "panelmix/types.hpp"

namespace panelmix {

// r_{ti} = y_{ti} - gamma * y_{t-1,i} - beta' z_{t,i}; the lag term reads y0
// at t = 1 and is dropped entirely in static mode.
Eigen::MatrixXd residuals(const PanelData& data, const std::optional<double>& gamma,
                          Eigen::Ref<const Eigen::VectorXd> beta);

// Per-unit sufficient statistics of a residual matrix: s1 = sum_t r,
// s2 = sum_t r^2. Everything downstream of the likelihood only needs these.
struct ResidualMoments {
  Eigen::VectorXd s1;  // length N
  Eigen::VectorXd s2;  // length N
  int n_periods = 0;

  static ResidualMoments from(const Eigen::MatrixXd& resid);
};

// sum_t log phi((r_t - alpha)/sigma) - T log sigma for one unit.
double log_component_likelihood(const PanelData& data, int unit, const std::optional<double>& gamma,
                                Eigen::Ref<const Eigen::VectorXd> beta, const Atom& theta);

inline double log_component_from_moments(double s1, double s2, int n_periods, const Atom& theta) {
  const double ss = s2 - 2.0 * theta.alpha * s1 + n_periods * theta.alpha * theta.alpha;
  return -0.5 * n_periods * (1.8378770664093454835606594728112 + std::log(theta.sigma2)) -
         0.5 * ss / theta.sigma2;
}

// log l(zeta | y; Z, y0) = sum_i log sum_k w_k f_k(y_i); log-sum-exp throughout.
double log_mixture_likelihood(const PanelData& data, const ModelParams& params);

double log_mixture_likelihood(const ResidualMoments& moments, const std::vector<Atom>& atoms,
                              Eigen::Ref<const Eigen::VectorXd> weights);

}  // namespace panelmix
