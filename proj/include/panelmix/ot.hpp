#pragma once

#include <Eigen/Dense>
#include <vector>

#include "panelmix/types.hpp"

namespace panelmix::ot {

// Ground metric on atoms (alpha, sigma2). Plain Euclidean by default; the
// weighted variant exists because the two coordinates carry different units.
struct AtomMetric {
  double w_alpha = 1.0;
  double w_sigma = 1.0;

  double operator()(const Atom& a, const Atom& b) const {
    const double da = a.alpha - b.alpha;
    const double ds = a.sigma2 - b.sigma2;
    return std::sqrt(w_alpha * da * da + w_sigma * ds * ds);
  }
};

struct TransportResult {
  double cost = 0.0;
  Eigen::MatrixXd plan;  // rows = supply atoms, cols = demand atoms
};

// Exact min-cost transport between two discrete measures (successive
// shortest paths). Marginals are matched to 1e-12.
TransportResult solve_transport(Eigen::Ref<const Eigen::VectorXd> supply,
                                Eigen::Ref<const Eigen::VectorXd> demand,
                                const Eigen::MatrixXd& cost);

// q-th order Wasserstein distance between atomic measures, exact optimum of
// the K x K' transportation problem.
double wasserstein(const MixingMeasure& m1, const MixingMeasure& m2, int order = 1,
                   const AtomMetric& metric = {});

enum class CondMode { kStatic, kDynamic };

// Mixing measure pushed through the regression map: atoms become T-vectors
// B_j conditional on each unit's covariates (and y0 in the dynamic case),
// paired with the component variance.
struct ConditionalAtoms {
  std::vector<Eigen::MatrixXd> b;  // per unit: T x K, column j = B_j
  Eigen::VectorXd sigma2;          // length K
  Eigen::VectorXd weights;         // length K
};

ConditionalAtoms conditional_atoms(const ModelParams& params, const PanelData& data, CondMode mode);

// (1/N) sum_i W_1(m_{z_i}, m'_{z_i}) with Euclidean ground metric on the
// concatenated (B_j, sigma2) in R^{T+1}; sigma_weight rescales the variance
// coordinate, which lives on a different unit than the outcome block.
double avg_conditional_w1(const ModelParams& params1, const ModelParams& params2,
                          const PanelData& data, CondMode mode, double sigma_weight = 1.0);

}  // namespace panelmix::ot
