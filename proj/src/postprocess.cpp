#include "panelmix/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "panelmix/errors.hpp"
#include "panelmix/stats.hpp"

namespace panelmix::post {

int map_estimate(const std::vector<int>& draws) { return stats::mode_int(draws); }

namespace {

// Indices of the non-empty components of a record.
std::vector<int> filled_indices(const DrawRecord& rec) {
  std::vector<int> idx;
  for (int k = 0; k < rec.k; ++k) {
    if (rec.counts[k] > 0) idx.push_back(k);
  }
  return idx;
}

IdentifiedDraw take_components(const DrawRecord& rec, const std::vector<int>& order) {
  IdentifiedDraw d;
  d.atoms.reserve(order.size());
  d.weights.resize(static_cast<Eigen::Index>(order.size()));
  double total = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    d.atoms.push_back(rec.atoms[order[j]]);
    d.weights[static_cast<Eigen::Index>(j)] = rec.weights[order[j]];
    total += rec.weights[order[j]];
  }
  if (total > 0.0) d.weights /= total;
  return d;
}

}  // namespace

IdentifiedDraws identify_by_ordering(const DrawStore& store, int kplus_target) {
  if (kplus_target < 1) throw InputError("identify: kplus_target must be >= 1");
  IdentifiedDraws out;
  out.kplus_target = kplus_target;
  for (const auto& rec : store.records) {
    if (rec.kplus != kplus_target) continue;
    std::vector<int> idx = filled_indices(rec);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return rec.atoms[a].alpha < rec.atoms[b].alpha; });
    out.draws.push_back(take_components(rec, idx));
  }
  return out;
}

IdentifiedDraws identify_by_clustering(const DrawStore& store, int kplus_target,
                                       ClusterFeatures features, Rng& rng) {
  if (kplus_target < 1) throw InputError("identify: kplus_target must be >= 1");
  IdentifiedDraws out;
  out.kplus_target = kplus_target;

  std::vector<const DrawRecord*> recs;
  for (const auto& rec : store.records) {
    if (rec.kplus == kplus_target) recs.push_back(&rec);
  }
  if (recs.empty()) return out;

  if (kplus_target == 1) {  // nothing to disambiguate
    for (const auto* rec : recs) out.draws.push_back(take_components(*rec, filled_indices(*rec)));
    return out;
  }

  const int d = features == ClusterFeatures::kAlphaOnly ? 1 : 2;
  const auto n_pool = static_cast<Eigen::Index>(recs.size()) * kplus_target;
  Eigen::MatrixXd pool(n_pool, d);
  Eigen::Index row = 0;
  for (const auto* rec : recs) {
    for (int k : filled_indices(*rec)) {
      pool(row, 0) = rec->atoms[k].alpha;
      if (d > 1) pool(row, 1) = std::log(rec->atoms[k].sigma2);
      ++row;
    }
  }
  // standardize features before clustering
  Eigen::RowVectorXd mu = pool.colwise().mean();
  Eigen::RowVectorXd sd(d);
  for (int j = 0; j < d; ++j) {
    const double var = (pool.col(j).array() - mu[j]).square().sum() / std::max<double>(1, n_pool - 1);
    sd[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  Eigen::MatrixXd std_pool = (pool.rowwise() - mu).array().rowwise() / sd.array();

  const KmeansResult km = kmeans(std_pool, kplus_target, 20, rng);

  // order clusters by ascending center alpha
  std::vector<int> rank(kplus_target);
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(),
            [&](int a, int b) { return km.centers(a, 0) < km.centers(b, 0); });
  std::vector<int> slot_of_cluster(kplus_target);
  for (int s = 0; s < kplus_target; ++s) slot_of_cluster[rank[s]] = s;

  row = 0;
  for (const auto* rec : recs) {
    const std::vector<int> idx = filled_indices(*rec);
    std::vector<int> order(kplus_target, -1);
    bool bijective = true;
    for (int j = 0; j < kplus_target; ++j) {
      const int slot = slot_of_cluster[km.assign[row + j]];
      if (order[slot] >= 0) bijective = false;
      order[slot] = idx[j];
    }
    row += kplus_target;
    if (!bijective) {
      ++out.n_discarded;
      continue;
    }
    out.draws.push_back(take_components(*rec, order));
  }
  out.unreliable = out.n_discarded * 2 > static_cast<int>(recs.size());
  return out;
}

namespace {

struct ScalarSummary {
  double mean, lo, hi;
};

ScalarSummary summarize_scalar(const std::vector<double>& draws) {
  ScalarSummary s;
  s.mean = stats::mean(draws);
  s.lo = stats::quantile(draws, 0.025);
  s.hi = stats::quantile(draws, 0.975);
  return s;
}

}  // namespace

PosteriorSummary summarize(const DrawStore& store, IdentStrategy strategy, ClusterFeatures features,
                           std::uint64_t ident_seed) {
  if (store.records.empty()) throw InputError("summarize: empty draw store");
  const auto n = static_cast<int>(store.records.size());

  PosteriorSummary s;
  s.n_draws = n;
  s.dynamic = store.dynamic;

  std::vector<int> k_draws(n), kplus_draws(n);
  for (int i = 0; i < n; ++i) {
    k_draws[i] = store.records[i].k;
    kplus_draws[i] = store.records[i].kplus;
  }
  s.k_map = map_estimate(k_draws);
  s.kplus_map = map_estimate(kplus_draws);
  s.k_q1 = stats::quantile_int(k_draws, 0.25);
  s.k_q3 = stats::quantile_int(k_draws, 0.75);
  s.kplus_q1 = stats::quantile_int(kplus_draws, 0.25);
  s.kplus_q3 = stats::quantile_int(kplus_draws, 0.75);

  const int kmax = *std::max_element(kplus_draws.begin(), kplus_draws.end());
  s.kplus_pmf = Eigen::VectorXd::Zero(kmax);
  for (int v : kplus_draws) s.kplus_pmf[v - 1] += 1.0 / n;

  IdentifiedDraws ident;
  if (strategy == IdentStrategy::kOrdering) {
    ident = identify_by_ordering(store, s.kplus_map);
  } else {
    Rng rng(ident_seed);
    ident = identify_by_clustering(store, s.kplus_map, features, rng);
  }
  const auto n_candidates = static_cast<double>(ident.draws.size() + ident.n_discarded);
  s.discard_frac = n_candidates > 0 ? ident.n_discarded / n_candidates : 0.0;
  s.ident_unreliable = ident.unreliable;
  if (!ident.draws.empty()) {
    s.atoms_mean.assign(s.kplus_map, Atom{0.0, 0.0});
    s.weights_mean = Eigen::VectorXd::Zero(s.kplus_map);
    for (const auto& d : ident.draws) {
      for (int j = 0; j < s.kplus_map; ++j) {
        s.atoms_mean[j].alpha += d.atoms[j].alpha;
        s.atoms_mean[j].sigma2 += d.atoms[j].sigma2;
      }
      s.weights_mean += d.weights;
    }
    const auto m = static_cast<double>(ident.draws.size());
    for (auto& a : s.atoms_mean) {
      a.alpha /= m;
      a.sigma2 /= m;
    }
    s.weights_mean /= s.weights_mean.sum();
  }

  const int p = store.n_covariates;
  if (store.dynamic) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = store.records[i].gamma;
    const ScalarSummary gs = summarize_scalar(g);
    s.gamma_mean = gs.mean;
    s.gamma_lo = gs.lo;
    s.gamma_hi = gs.hi;
  }
  s.beta_mean.resize(p);
  s.beta_lo.resize(p);
  s.beta_hi.resize(p);
  s.cumeff_mean.resize(p);
  s.cumeff_lo.resize(p);
  s.cumeff_hi.resize(p);
  std::vector<double> draws(n);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) draws[i] = store.records[i].beta[j];
    const ScalarSummary bs = summarize_scalar(draws);
    s.beta_mean[j] = bs.mean;
    s.beta_lo[j] = bs.lo;
    s.beta_hi[j] = bs.hi;
    // cumulative effect beta/(1-gamma), draw-wise on the joint posterior
    for (int i = 0; i < n; ++i) {
      const double g = store.dynamic ? store.records[i].gamma : 0.0;
      draws[i] = store.records[i].beta[j] / (1.0 - g);
    }
    const ScalarSummary cs = summarize_scalar(draws);
    s.cumeff_mean[j] = cs.mean;
    s.cumeff_lo[j] = cs.lo;
    s.cumeff_hi[j] = cs.hi;
  }
  return s;
}

McAggregate aggregate_mc(const std::vector<PosteriorSummary>& reps, std::optional<int> true_k) {
  if (reps.empty()) throw InputError("aggregate_mc: no replications");
  McAggregate agg;
  agg.n_reps = static_cast<int>(reps.size());
  agg.dynamic = reps.front().dynamic;
  const double n = agg.n_reps;

  for (const auto& r : reps) {
    agg.k_hat += r.k_map / n;
    agg.kplus_hat += r.kplus_map / n;
    agg.k_q1 += r.k_q1 / n;
    agg.k_q3 += r.k_q3 / n;
    agg.kplus_q1 += r.kplus_q1 / n;
    agg.kplus_q3 += r.kplus_q3 / n;
  }
  agg.kplus_round = static_cast<int>(std::lround(agg.kplus_hat));

  // averaging set for atoms and weights
  bool attained = false;
  for (const auto& r : reps) attained = attained || r.kplus_map == agg.kplus_round;
  int slots;
  std::vector<const PosteriorSummary*> pool;
  if (attained) {
    slots = agg.kplus_round;
    for (const auto& r : reps)
      if (r.kplus_map <= agg.kplus_round) pool.push_back(&r);
  } else {
    if (!true_k) throw InputError("aggregate_mc: K-hat-plus never attained and true K* unknown");
    slots = *true_k;
    for (const auto& r : reps)
      if (r.kplus_map == *true_k) pool.push_back(&r);
  }
  // only replications whose identified dimension matches the slot count can
  // contribute component-wise averages
  agg.atoms_mean.assign(slots, Atom{0.0, 0.0});
  agg.weights_mean = Eigen::VectorXd::Zero(slots);
  for (const auto* r : pool) {
    if (static_cast<int>(r->atoms_mean.size()) != slots) continue;
    ++agg.n_reps_atoms;
    for (int j = 0; j < slots; ++j) {
      agg.atoms_mean[j].alpha += r->atoms_mean[j].alpha;
      agg.atoms_mean[j].sigma2 += r->atoms_mean[j].sigma2;
    }
    agg.weights_mean += r->weights_mean;
  }
  if (agg.n_reps_atoms > 0) {
    for (auto& a : agg.atoms_mean) {
      a.alpha /= agg.n_reps_atoms;
      a.sigma2 /= agg.n_reps_atoms;
    }
    agg.weights_mean /= agg.n_reps_atoms;
  } else {
    agg.atoms_mean.clear();
    agg.weights_mean.resize(0);
  }

  const auto p = reps.front().beta_mean.size();
  agg.beta_mean = Eigen::VectorXd::Zero(p);
  agg.beta_lo = Eigen::VectorXd::Zero(p);
  agg.beta_hi = Eigen::VectorXd::Zero(p);
  agg.cumeff_mean = Eigen::VectorXd::Zero(p);
  agg.cumeff_lo = Eigen::VectorXd::Zero(p);
  agg.cumeff_hi = Eigen::VectorXd::Zero(p);
  for (const auto& r : reps) {
    if (agg.dynamic) {
      agg.gamma_mean += r.gamma_mean / n;
      agg.gamma_lo += r.gamma_lo / n;
      agg.gamma_hi += r.gamma_hi / n;
    }
    agg.beta_mean += r.beta_mean / n;
    agg.beta_lo += r.beta_lo / n;
    agg.beta_hi += r.beta_hi / n;
    agg.cumeff_mean += r.cumeff_mean / n;
    agg.cumeff_lo += r.cumeff_lo / n;
    agg.cumeff_hi += r.cumeff_hi / n;
  }
  return agg;
}

}  // namespace panelmix::post
