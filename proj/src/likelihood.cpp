#include "panelmix/likelihood.hpp"

#include <cmath>

#include "panelmix/errors.hpp"
#include "panelmix/stats.hpp"

namespace panelmix {

Eigen::MatrixXd residuals(const PanelData& data, const std::optional<double>& gamma,
                          Eigen::Ref<const Eigen::VectorXd> beta) {
  if (gamma.has_value() != data.dynamic)
    throw InputError("residuals: gamma must be present iff the panel is dynamic");
  if (beta.size() != data.n_covariates())
    throw InputError("residuals: beta length != number of covariates");

  const int T = data.n_periods();
  const int N = data.n_units();
  Eigen::MatrixXd r = data.y;
  if (gamma) {
    const double g = *gamma;
    for (int i = 0; i < N; ++i) {
      r(0, i) -= g * data.y0[i];
      for (int t = 1; t < T; ++t) r(t, i) -= g * data.y(t - 1, i);
    }
  }
  if (beta.size() > 0) {
    for (int i = 0; i < N; ++i) r.col(i) -= data.z[i] * beta;
  }
  return r;
}

ResidualMoments ResidualMoments::from(const Eigen::MatrixXd& resid) {
  ResidualMoments m;
  m.n_periods = static_cast<int>(resid.rows());
  m.s1 = resid.colwise().sum();
  m.s2 = resid.array().square().colwise().sum();
  return m;
}

double log_component_likelihood(const PanelData& data, int unit, const std::optional<double>& gamma,
                                Eigen::Ref<const Eigen::VectorXd> beta, const Atom& theta) {
  if (!(theta.sigma2 > 0.0)) throw InputError("log_component_likelihood: nonpositive variance");
  const Eigen::MatrixXd r = residuals(data, gamma, beta);
  double s1 = 0.0, s2 = 0.0;
  for (int t = 0; t < data.n_periods(); ++t) {
    s1 += r(t, unit);
    s2 += r(t, unit) * r(t, unit);
  }
  return log_component_from_moments(s1, s2, data.n_periods(), theta);
}

double log_mixture_likelihood(const ResidualMoments& moments, const std::vector<Atom>& atoms,
                              Eigen::Ref<const Eigen::VectorXd> weights) {
  const auto K = static_cast<Eigen::Index>(atoms.size());
  const auto N = moments.s1.size();
  Eigen::VectorXd logw(K);
  for (Eigen::Index k = 0; k < K; ++k)
    logw[k] = weights[k] > 0.0 ? std::log(weights[k]) : stats::kNegInf;

  double total = 0.0;
  Eigen::VectorXd terms(K);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index k = 0; k < K; ++k) {
      terms[k] = logw[k] +
                 log_component_from_moments(moments.s1[i], moments.s2[i], moments.n_periods, atoms[k]);
    }
    total += stats::log_sum_exp(terms);
  }
  return total;
}

double log_mixture_likelihood(const PanelData& data, const ModelParams& params) {
  params.validate();
  const auto moments = ResidualMoments::from(residuals(data, params.gamma, params.beta));
  return log_mixture_likelihood(moments, params.atoms, params.weights);
}

}  // namespace panelmix
