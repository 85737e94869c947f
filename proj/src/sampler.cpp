#include "panelmix/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "panelmix/errors.hpp"
#include "panelmix/kmeans.hpp"
#include "panelmix/stats.hpp"

namespace panelmix {

using stats::kNegInf;

void SamplerSettings::validate() const {
  if (n_iter < 1) throw InputError("sampler: n_iter must be >= 1");
  if (n_burnin < 0) throw InputError("sampler: n_burnin must be >= 0");
  if (thin < 1) throw InputError("sampler: thin must be >= 1");
  if (!(mh_step_sd > 0)) throw InputError("sampler: mh_step_sd must be positive");
  if (init_k < 0) throw InputError("sampler: init_k must be >= 0");
}

namespace {

// Permute components so the non-empty ones come first, ordered by the first
// unit allocated to them. The rule is label-free, which makes a relabeled
// state independent of how the components were labeled coming in.
void relabel_first_occurrence(ChainState& state) {
  const int K = state.n_components();
  const int N = state.alloc.n_units();
  std::vector<int> new_of_old(K, -1);
  int next = 0;
  for (int i = 0; i < N; ++i) {
    const int k = state.alloc.chi[i] - 1;
    if (new_of_old[k] < 0) new_of_old[k] = next++;
  }
  for (int k = 0; k < K; ++k) {
    if (new_of_old[k] < 0) new_of_old[k] = next++;
  }
  std::vector<Atom> atoms(K);
  Eigen::VectorXd weights(K);
  for (int k = 0; k < K; ++k) {
    atoms[new_of_old[k]] = state.params.atoms[k];
    weights[new_of_old[k]] = state.params.weights[k];
  }
  state.params.atoms = std::move(atoms);
  state.params.weights = std::move(weights);
  for (int i = 0; i < N; ++i) state.alloc.chi[i] = new_of_old[state.alloc.chi[i] - 1] + 1;
}

// Cluster sizes of the filled prefix; requires a relabeled state.
Eigen::VectorXi filled_counts(const ChainState& state) {
  const Eigen::VectorXi all = state.alloc.counts(state.n_components());
  int kplus = 0;
  while (kplus < all.size() && all[kplus] > 0) ++kplus;
  if ((all.tail(all.size() - kplus).array() > 0).any())
    throw NumericError("sampler: state not relabeled (non-empty component after an empty one)");
  return all.head(kplus);
}

}  // namespace

void step_allocations(ChainState& state, const ResidualMoments& moments, Rng& rng) {
  const int K = state.n_components();
  const int N = state.alloc.n_units();
  const int T = moments.n_periods;

  // scan components in a label-free order so that the draw commutes with
  // any relabeling of the incoming state
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Atom& x = state.params.atoms[a];
    const Atom& y = state.params.atoms[b];
    if (x.alpha != y.alpha) return x.alpha < y.alpha;
    if (x.sigma2 != y.sigma2) return x.sigma2 < y.sigma2;
    if (state.params.weights[a] != state.params.weights[b])
      return state.params.weights[a] < state.params.weights[b];
    return a < b;
  });

  // log p(chi_i = k) = log w_k + a_k + b_k s1_i + c_k s2_i
  Eigen::VectorXd a(K), b(K), c(K);
  for (int j = 0; j < K; ++j) {
    const int k = order[j];
    const Atom& atom = state.params.atoms[k];
    const double w = state.params.weights[k];
    const double base = w > 0.0 ? std::log(w) : kNegInf;
    a[j] = base - 0.5 * T * (stats::kLog2Pi + std::log(atom.sigma2)) -
           0.5 * T * atom.alpha * atom.alpha / atom.sigma2;
    b[j] = atom.alpha / atom.sigma2;
    c[j] = -0.5 / atom.sigma2;
  }

  Eigen::VectorXd logp(K);
  for (int i = 0; i < N; ++i) {
    logp = a + b * moments.s1[i] + c * moments.s2[i];
    state.alloc.chi[i] = order[rng.categorical_logits(logp)] + 1;
  }
  relabel_first_occurrence(state);
}

void step_atoms(ChainState& state, const ResidualMoments& moments, const AtomPrior& prior, Rng& rng) {
  const int K = state.n_components();
  const int N = state.alloc.n_units();
  const int T = moments.n_periods;

  Eigen::VectorXi n = Eigen::VectorXi::Zero(K);
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(K);
  for (int i = 0; i < N; ++i) {
    const int k = state.alloc.chi[i] - 1;
    ++n[k];
    s1[k] += moments.s1[i];
    s2[k] += moments.s2[i];
  }

  for (int k = 0; k < K; ++k) {
    if (n[k] == 0) continue;
    Atom& atom = state.params.atoms[k];
    const double nt = static_cast<double>(n[k]) * T;
    // alpha | sigma2
    const double var = 1.0 / (1.0 / prior.B0 + nt / atom.sigma2);
    const double mean = var * (prior.b0 / prior.B0 + s1[k] / atom.sigma2);
    atom.alpha = rng.normal(mean, std::sqrt(var));
    // sigma2 | alpha
    const double ss = s2[k] - 2.0 * atom.alpha * s1[k] + nt * atom.alpha * atom.alpha;
    atom.sigma2 = rng.inv_gamma(prior.c0 + 0.5 * nt, state.C0 + 0.5 * ss);
  }
}

void step_hyper_C0(ChainState& state, const AtomPrior& prior, Rng& rng) {
  if (prior.C0_fixed) return;
  const Eigen::VectorXi counts = state.alloc.counts(state.n_components());
  int kplus = 0;
  double inv_sum = 0.0;
  for (int k = 0; k < state.n_components(); ++k) {
    if (counts[k] > 0) {
      ++kplus;
      inv_sum += 1.0 / state.params.atoms[k].sigma2;
    }
  }
  state.C0 = rng.gamma(prior.C0_prior.shape + kplus * prior.c0, prior.C0_prior.rate + inv_sum);
}

void step_regression(ChainState& state, const PanelData& data, const RegressionPrior& prior, Rng& rng) {
  const int p = data.n_covariates();
  const int d = (data.dynamic ? 1 : 0) + p;
  if (d == 0) return;
  const int T = data.n_periods();
  const int N = data.n_units();

  Eigen::VectorXd m0(d);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d, d);
  if (data.dynamic) {
    P(0, 0) = 1.0 / prior.Gamma0;
    m0[0] = prior.gamma0;
  }
  if (p > 0) {
    P.bottomRightCorner(p, p) = prior.Omega0.llt().solve(Eigen::MatrixXd::Identity(p, p));
    m0.tail(p) = prior.beta0;
  }
  Eigen::VectorXd bvec = P * m0;

  Eigen::VectorXd x(d);
  for (int i = 0; i < N; ++i) {
    const Atom& atom = state.params.atoms[state.alloc.chi[i] - 1];
    const double w = 1.0 / atom.sigma2;
    for (int t = 0; t < T; ++t) {
      if (data.dynamic) x[0] = t > 0 ? data.y(t - 1, i) : data.y0[i];
      if (p > 0) x.tail(p) = data.z[i].row(t);
      const double ytil = data.y(t, i) - atom.alpha;
      P.selfadjointView<Eigen::Lower>().rankUpdate(x, w);
      bvec += x * (ytil * w);
    }
  }
  P = P.selfadjointView<Eigen::Lower>();

  const Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success)
    throw NumericError("step_regression: posterior precision not SPD (degenerate design)");
  const Eigen::VectorXd mu = llt.solve(bvec);

  auto draw_joint = [&]() -> Eigen::VectorXd {
    // covariance is P^{-1} = L^{-T} L^{-1}
    return mu + llt.matrixL().transpose().solve(rng.gaussian_vector(d));
  };

  if (!data.dynamic) {
    state.params.beta = draw_joint();
    return;
  }

  Eigen::VectorXd draw;
  bool ok = false;
  for (int attempt = 0; attempt < 100; ++attempt) {
    draw = draw_joint();
    if (std::fabs(draw[0]) < 1.0) {
      ok = true;
      break;
    }
  }
  if (!ok) {
    // keep the last accepted beta and draw gamma from its exact conditional
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(d, d));
    double cmean = mu[0];
    double cvar = cov(0, 0);
    if (p > 0) {
      const Eigen::MatrixXd cbb = cov.bottomRightCorner(p, p);
      const Eigen::VectorXd cgb = cov.topRightCorner(1, p).transpose();
      const Eigen::VectorXd sol = cbb.llt().solve(cgb);
      cmean += sol.dot(draw.tail(p) - mu.tail(p));
      cvar -= cgb.dot(sol);
    }
    draw[0] = rng.truncated_normal(cmean, std::sqrt(std::max(cvar, 1e-300)), -1.0, 1.0);
  }
  state.params.gamma = draw[0];
  if (p > 0) state.params.beta = draw.tail(p);
}

void step_K(ChainState& state, const KPrior& kp, const WeightPrior& wp, Rng& rng) {
  const Eigen::VectorXi counts = filled_counts(state);
  const auto kplus = static_cast<int>(counts.size());
  const int k_new = sample_K_conditional(kp, counts, wp, state.e0, rng);

  state.params.atoms.resize(k_new, Atom{0.0, 1.0});
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k_new);
  w.head(std::min(kplus, k_new)) = state.params.weights.head(std::min(kplus, k_new));
  state.params.weights = std::move(w);
}

void step_v(ChainState& state, const WeightPrior& wp, double step_sd, Rng& rng) {
  if (wp.e0_fixed) return;
  const Eigen::VectorXi counts = filled_counts(state);
  const int K = state.n_components();

  const double e0_old = state.e0;
  const double e0_new = e0_old * std::exp(step_sd * rng.normal());
  const double lp_new = log_eppf(counts, K, wp.concentration(e0_new, K)) + log_density_e0(e0_new, wp) +
                        std::log(e0_new);
  const double lp_old = log_eppf(counts, K, wp.concentration(e0_old, K)) + log_density_e0(e0_old, wp) +
                        std::log(e0_old);
  if (std::log(rng.uniform()) < lp_new - lp_old) state.e0 = e0_new;
}

void step_weights_and_empties(ChainState& state, const AtomPrior& ap, const WeightPrior& wp, Rng& rng) {
  const int K = state.n_components();
  const Eigen::VectorXi counts = state.alloc.counts(K);
  for (int k = 0; k < K; ++k) {
    if (counts[k] == 0) {
      state.params.atoms[k].alpha = rng.normal(ap.b0, std::sqrt(ap.B0));
      state.params.atoms[k].sigma2 = rng.inv_gamma(ap.c0, state.C0);
    }
  }
  const double v = wp.concentration(state.e0, K);
  const Eigen::VectorXd conc = counts.cast<double>().array() + v;
  state.params.weights = rng.dirichlet(conc);
}

double sweep(ChainState& state, const PanelData& data, const PriorConfig& priors, double step_sd,
             Rng& rng) {
  ResidualMoments moments =
      ResidualMoments::from(residuals(data, state.params.gamma, state.params.beta));
  step_allocations(state, moments, rng);
  step_atoms(state, moments, priors.atom_prior, rng);
  step_hyper_C0(state, priors.atom_prior, rng);
  step_regression(state, data, priors.regression_prior, rng);
  if (data.dynamic || data.n_covariates() > 0)
    moments = ResidualMoments::from(residuals(data, state.params.gamma, state.params.beta));
  step_K(state, priors.k_prior, priors.weight_prior, rng);
  step_v(state, priors.weight_prior, step_sd, rng);
  step_weights_and_empties(state, priors.atom_prior, priors.weight_prior, rng);
  ++state.iter;
  return log_mixture_likelihood(moments, state.params.atoms, state.params.weights);
}

namespace {

ChainState kmeans_warmstart(const PanelData& data, const PriorConfig& priors, int k, Rng& rng);

}  // namespace

ChainState init_state(const PanelData& data, const PriorConfig& priors, InitRule rule, int init_k,
                      Rng& rng) {
  const int p = data.n_covariates();
  KPriorTable table(priors.k_prior);
  int k0 = init_k > 0 ? init_k : table.mode();
  if (priors.k_prior.support_max() > 0) k0 = std::min(k0, priors.k_prior.support_max());
  k0 = std::min(k0, data.n_units());

  if (rule == InitRule::kKmeansWarmstart) return kmeans_warmstart(data, priors, k0, rng);

  ChainState state;
  state.C0 = priors.atom_prior.C0_fixed
                 ? priors.atom_prior.C0
                 : rng.gamma(priors.atom_prior.C0_prior.shape, priors.atom_prior.C0_prior.rate);
  state.e0 = priors.weight_prior.e0_fixed
                 ? priors.weight_prior.e0
                 : rng.gamma(priors.weight_prior.e0_prior.shape, priors.weight_prior.e0_prior.rate);
  state.params.atoms.resize(k0);
  for (auto& atom : state.params.atoms) {
    atom.alpha = rng.normal(priors.atom_prior.b0, std::sqrt(priors.atom_prior.B0));
    atom.sigma2 = rng.inv_gamma(priors.atom_prior.c0, state.C0);
  }
  const double v = priors.weight_prior.concentration(state.e0, k0);
  state.params.weights = rng.dirichlet(Eigen::VectorXd::Constant(k0, v));
  if (data.dynamic)
    state.params.gamma = rng.truncated_normal(priors.regression_prior.gamma0,
                                              std::sqrt(priors.regression_prior.Gamma0), -1.0, 1.0);
  state.params.beta = Eigen::VectorXd::Zero(p);
  if (p > 0) {
    const Eigen::MatrixXd L = priors.regression_prior.Omega0.llt().matrixL();
    state.params.beta = priors.regression_prior.beta0 + L * rng.gaussian_vector(p);
  }
  state.alloc.chi.resize(data.n_units());
  for (int i = 0; i < data.n_units(); ++i)
    state.alloc.chi[i] = 1 + static_cast<int>(rng.uniform() * k0) % k0;
  return state;
}

namespace {

ChainState kmeans_warmstart(const PanelData& data, const PriorConfig& priors, int k, Rng& rng) {
  const int N = data.n_units();
  const Eigen::MatrixXd unit_means = data.y.colwise().mean().transpose();

  const KmeansResult km = kmeans(unit_means, k, 20, rng);
  const std::vector<int>& assign = km.assign;
  std::vector<double> centers(k);
  for (int j = 0; j < k; ++j) centers[j] = km.centers(j, 0);

  ChainState state;
  state.C0 = priors.atom_prior.C0_fixed ? priors.atom_prior.C0
                                        : priors.atom_prior.C0_prior.shape / priors.atom_prior.C0_prior.rate;
  state.e0 = priors.weight_prior.e0_fixed ? priors.weight_prior.e0
                                          : priors.weight_prior.e0_prior.shape / priors.weight_prior.e0_prior.rate;
  state.params.atoms.resize(k);
  state.params.weights.resize(k);
  std::vector<int> cnt(k, 0);
  for (int i = 0; i < N; ++i) ++cnt[assign[i]];
  for (int j = 0; j < k; ++j) {
    double ss = 0.0;
    int m = 0;
    for (int i = 0; i < N; ++i) {
      if (assign[i] != j) continue;
      for (int t = 0; t < data.n_periods(); ++t) {
        const double d = data.y(t, i) - centers[j];
        ss += d * d;
        ++m;
      }
    }
    state.params.atoms[j].alpha = centers[j];
    state.params.atoms[j].sigma2 = m > 1 ? std::max(ss / m, 1e-6) : 1.0;
    state.params.weights[j] = std::max(cnt[j], 1);
  }
  state.params.weights /= state.params.weights.sum();
  if (data.dynamic) state.params.gamma = std::clamp(priors.regression_prior.gamma0, -0.99, 0.99);
  state.params.beta = priors.regression_prior.beta0;
  if (state.params.beta.size() != data.n_covariates())
    state.params.beta = Eigen::VectorXd::Zero(data.n_covariates());
  state.alloc.chi.resize(N);
  for (int i = 0; i < N; ++i) state.alloc.chi[i] = assign[i] + 1;
  return state;
}

}  // namespace

DrawStore run_chain(const PanelData& data, const PriorConfig& priors, const SamplerSettings& settings) {
  data.validate();
  settings.validate();
  priors.k_prior.validate();
  priors.weight_prior.validate();
  priors.atom_prior.validate();
  priors.regression_prior.validate(data.n_covariates());

  Rng rng(settings.seed);
  ChainState state = init_state(data, priors, settings.init_rule, settings.init_k, rng);

  DrawStore store;
  store.dynamic = data.dynamic;
  store.n_covariates = data.n_covariates();
  store.records.reserve(settings.n_iter / settings.thin + 1);

  double step_sd = settings.mh_step_sd;
  int mh_accepts = 0;
  const long total = static_cast<long>(settings.n_burnin) + settings.n_iter;
  for (long it = 1; it <= total; ++it) {
    const double e0_before = state.e0;
    double loglik;
    try {
      loglik = sweep(state, data, priors, step_sd, rng);
    } catch (const std::exception& e) {
      throw NumericError("run_chain: iteration " + std::to_string(it) + ": " + e.what() +
                         " (K=" + std::to_string(state.n_components()) +
                         ", K+=" + std::to_string(state.n_filled()) + ")");
    }
    if (settings.adapt_mh_during_burnin && it <= settings.n_burnin) {
      // scale toward a 0.44 acceptance rate; frozen once burn-in ends
      if (state.e0 != e0_before) ++mh_accepts;
      if (it % 50 == 0) {
        const double rate = mh_accepts / 50.0;
        step_sd = std::clamp(step_sd * std::exp(rate - 0.44), 1e-3, 10.0);
        mh_accepts = 0;
      }
    }
    if (it <= settings.n_burnin) continue;
    if ((it - settings.n_burnin) % settings.thin != 0) continue;

    DrawRecord rec;
    rec.iter = it;
    rec.k = state.n_components();
    rec.counts = state.alloc.counts(rec.k);
    rec.kplus = static_cast<int>((rec.counts.array() > 0).count());
    rec.gamma = state.params.gamma.value_or(std::numeric_limits<double>::quiet_NaN());
    rec.beta = state.params.beta;
    rec.e0 = state.e0;
    rec.v = priors.weight_prior.concentration(state.e0, rec.k);
    rec.C0 = state.C0;
    rec.loglik = loglik;
    rec.atoms = state.params.atoms;
    rec.weights = state.params.weights;
    if (settings.store_allocations) rec.alloc = state.alloc.chi;
    store.records.push_back(std::move(rec));
  }
  return store;
}

}  // namespace panelmix
