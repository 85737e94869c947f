#include "panelmix/dgp.hpp"

#include <cmath>

#include "panelmix/errors.hpp"

namespace panelmix {

void DgpConfig::validate() const {
  true_params.validate();
  if (n_units < 1 || n_periods < 1) throw InputError("dgp: need N >= 1 and T >= 1");
  if (covariate_sd < 0.0) throw InputError("dgp: negative covariate sd");
  for (const auto& a : true_params.atoms) {
    if (a.sigma2 <= 1e-10) throw InputError("dgp: variance atom below 1e-10 floor");
  }
  if (y0_rule == Y0Rule::kUserVector && y0_user.size() != n_units)
    throw InputError("dgp: user y0 vector length != N");
}

SimulatedPanel simulate_panel(const DgpConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  const int N = cfg.n_units;
  const int T = cfg.n_periods;
  const auto p = cfg.true_params.beta.size();
  const double gamma = cfg.true_params.gamma.value_or(0.0);
  const bool dynamic = cfg.true_params.gamma.has_value();

  SimulatedPanel out;
  out.alloc.chi.resize(N);
  out.data.dynamic = dynamic;
  out.data.lag_offset = 0;
  out.data.y.resize(T, N);
  out.data.y0 = Eigen::VectorXd::Zero(N);
  out.data.z.assign(N, Eigen::MatrixXd(T, p));

  for (int i = 0; i < N; ++i) {
    const int k = rng.categorical(cfg.true_params.weights);
    out.alloc.chi[i] = k + 1;
    const Atom& atom = cfg.true_params.atoms[k];
    const double sigma = std::sqrt(atom.sigma2);

    Eigen::MatrixXd& zi = out.data.z[i];
    for (int t = 0; t < T; ++t)
      for (Eigen::Index l = 0; l < p; ++l) zi(t, l) = rng.normal(cfg.covariate_mean, cfg.covariate_sd);

    double y0 = 0.0;
    if (dynamic) {
      switch (cfg.y0_rule) {
        case Y0Rule::kZero:
          y0 = 0.0;
          break;
        case Y0Rule::kStationaryDraw: {
          const double mz = cfg.covariate_mean * cfg.true_params.beta.sum();
          y0 = rng.normal((atom.alpha + mz) / (1.0 - gamma),
                          sigma / std::sqrt(1.0 - gamma * gamma));
          break;
        }
        case Y0Rule::kUserVector:
          y0 = cfg.y0_user[i];
          break;
      }
    }
    out.data.y0[i] = y0;

    double prev = y0;
    for (int t = 0; t < T; ++t) {
      const double mean = gamma * prev + zi.row(t).dot(cfg.true_params.beta) + atom.alpha;
      out.data.y(t, i) = rng.normal(mean, sigma);
      prev = out.data.y(t, i);
    }
  }
  return out;
}

MixingMeasure realized_measure(const Allocations& alloc, const ModelParams& params) {
  if (alloc.n_units() == 0) throw InputError("realized_measure: empty allocation");
  const int K = params.n_components();
  const Eigen::VectorXi counts = alloc.counts(K);

  MixingMeasure m;
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    if (counts[k] > 0) {
      m.atoms.push_back(params.atoms[k]);
      total += params.weights[k];
    }
  }
  m.weights.resize(static_cast<Eigen::Index>(m.atoms.size()));
  Eigen::Index j = 0;
  for (int k = 0; k < K; ++k) {
    if (counts[k] > 0) m.weights[j++] = params.weights[k] / total;
  }
  return m;
}

}  // namespace panelmix
