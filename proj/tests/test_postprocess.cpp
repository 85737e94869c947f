#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "panelmix/postprocess.hpp"

using namespace panelmix;
using namespace panelmix::post;

namespace {

DrawRecord make_record(std::vector<Atom> atoms, std::vector<double> weights,
                       std::vector<int> counts, double gamma = 0.0,
                       std::vector<double> beta = {}) {
  DrawRecord rec;
  rec.k = static_cast<int>(atoms.size());
  rec.atoms = std::move(atoms);
  rec.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  rec.counts = Eigen::Map<Eigen::VectorXi>(counts.data(), static_cast<Eigen::Index>(counts.size()));
  rec.kplus = static_cast<int>((rec.counts.array() > 0).count());
  rec.gamma = gamma;
  rec.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  return rec;
}

}  // namespace

TEST_CASE("map_estimate: mode with ties toward the smaller value") {
  CHECK(map_estimate({3, 3, 3, 4}) == 3);
  CHECK(map_estimate({2, 2, 3, 3}) == 2);
  CHECK(map_estimate({5}) == 5);
}

TEST_CASE("identify_by_ordering: sorts by alpha and renormalizes") {
  DrawStore store;
  store.records.push_back(
      make_record({{5.0, 1.0}, {-5.0, 2.0}, {0.0, 3.0}}, {0.2, 0.3, 0.5}, {4, 3, 3}));
  const IdentifiedDraws id = identify_by_ordering(store, 3);
  REQUIRE(id.draws.size() == 1);
  CHECK(id.draws[0].atoms[0].alpha == -5.0);
  CHECK(id.draws[0].atoms[1].alpha == 0.0);
  CHECK(id.draws[0].atoms[2].alpha == 5.0);
  CHECK(id.draws[0].atoms[0].sigma2 == 2.0);
  CHECK(std::fabs(id.draws[0].weights.sum() - 1.0) < 1e-14);

  // equal alphas keep their original index order
  DrawStore tie;
  tie.records.push_back(make_record({{1.0, 9.0}, {1.0, 4.0}}, {0.5, 0.5}, {2, 2}));
  const IdentifiedDraws idt = identify_by_ordering(tie, 2);
  CHECK(idt.draws[0].atoms[0].sigma2 == 9.0);
  CHECK(idt.draws[0].atoms[1].sigma2 == 4.0);
}

TEST_CASE("identify_by_ordering: only draws at the target K+ survive, empties dropped") {
  DrawStore store;
  store.records.push_back(make_record({{1.0, 1.0}, {2.0, 1.0}}, {0.6, 0.4}, {5, 0}));  // K+=1
  store.records.push_back(make_record({{3.0, 1.0}, {0.0, 1.0}}, {0.5, 0.5}, {3, 2}));  // K+=2
  const IdentifiedDraws id = identify_by_ordering(store, 2);
  REQUIRE(id.draws.size() == 1);
  CHECK(id.draws[0].atoms[0].alpha == 0.0);
  const IdentifiedDraws id1 = identify_by_ordering(store, 1);
  REQUIRE(id1.draws.size() == 1);
  CHECK(id1.draws[0].weights[0] == 1.0);
}

TEST_CASE("identify_by_clustering: separated clusters match the ordering strategy") {
  Rng noise(42);
  DrawStore store;
  for (int d = 0; d < 200; ++d) {
    // two well-separated groups with label switching
    Atom low{-5.0 + 0.05 * noise.normal(), 1.0};
    Atom high{5.0 + 0.05 * noise.normal(), 1.0};
    if (d % 2 == 0)
      store.records.push_back(make_record({low, high}, {0.4, 0.6}, {4, 6}));
    else
      store.records.push_back(make_record({high, low}, {0.6, 0.4}, {6, 4}));
  }
  Rng rng(1);
  const IdentifiedDraws cl = identify_by_clustering(store, 2, ClusterFeatures::kAlphaOnly, rng);
  const IdentifiedDraws ord = identify_by_ordering(store, 2);
  REQUIRE(cl.draws.size() == ord.draws.size());
  CHECK(cl.n_discarded == 0);
  for (std::size_t i = 0; i < cl.draws.size(); ++i) {
    CHECK(cl.draws[i].atoms[0].alpha == ord.draws[i].atoms[0].alpha);
    CHECK(cl.draws[i].atoms[1].alpha == ord.draws[i].atoms[1].alpha);
  }

  // silhouette of the pooled cloud is high for this design
  Eigen::MatrixXd pool(2 * store.records.size(), 1);
  std::vector<int> assign(2 * store.records.size());
  for (std::size_t d = 0; d < store.records.size(); ++d) {
    pool(2 * d, 0) = store.records[d].atoms[0].alpha;
    pool(2 * d + 1, 0) = store.records[d].atoms[1].alpha;
    assign[2 * d] = pool(2 * d, 0) < 0 ? 0 : 1;
    assign[2 * d + 1] = pool(2 * d + 1, 0) < 0 ? 0 : 1;
  }
  CHECK(silhouette(pool, assign, 2) > 0.8);
}

TEST_CASE("identify_by_clustering: single target needs no relabeling") {
  DrawStore store;
  store.records.push_back(make_record({{1.0, 1.0}}, {1.0}, {7}));
  Rng rng(2);
  const IdentifiedDraws id = identify_by_clustering(store, 1, ClusterFeatures::kAlphaOnly, rng);
  CHECK(id.n_discarded == 0);
  CHECK(id.draws.size() == 1);
}

TEST_CASE("summarize: constant draws give zero-width intervals") {
  DrawStore store;
  store.dynamic = true;
  store.n_covariates = 1;
  for (int d = 0; d < 10; ++d)
    store.records.push_back(make_record({{1.0, 2.0}}, {1.0}, {5}, 0.5, {0.1}));
  const PosteriorSummary s = summarize(store, IdentStrategy::kOrdering, ClusterFeatures::kAlphaOnly, 0);
  CHECK(s.kplus_map == 1);
  CHECK(s.gamma_mean == 0.5);
  CHECK(s.gamma_lo == 0.5);
  CHECK(s.gamma_hi == 0.5);
  CHECK(s.beta_mean[0] == doctest::Approx(0.1));
  CHECK(s.cumeff_mean[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.cumeff_lo[0] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("summarize: cumulative effect is draw-wise, not a ratio of means") {
  DrawStore store;
  store.dynamic = true;
  store.n_covariates = 1;
  for (int d = 0; d < 50; ++d) {
    if (d % 2 == 0)
      store.records.push_back(make_record({{0.0, 1.0}}, {1.0}, {5}, 0.8, {1.0}));
    else
      store.records.push_back(make_record({{0.0, 1.0}}, {1.0}, {5}, 0.0, {0.2}));
  }
  const PosteriorSummary s = summarize(store, IdentStrategy::kOrdering, ClusterFeatures::kAlphaOnly, 0);
  const double drawwise = 0.5 * (1.0 / 0.2) + 0.5 * (0.2 / 1.0);
  const double ratio_of_means = 0.6 / (1.0 - 0.4);
  CHECK(std::fabs(drawwise - ratio_of_means) / ratio_of_means > 0.10);
  CHECK(s.cumeff_mean[0] == doctest::Approx(drawwise).epsilon(1e-12));
}

TEST_CASE("summarize: invariant to the order of draws") {
  Rng rng(3);
  DrawStore store;
  store.n_covariates = 1;
  for (int d = 0; d < 60; ++d) {
    const int kplus = 1 + (d % 2);
    if (kplus == 1)
      store.records.push_back(
          make_record({{rng.normal(), 1.0}}, {1.0}, {6}, 0.0, {rng.normal()}));
    else
      store.records.push_back(make_record({{rng.normal(), 1.0}, {3.0 + rng.normal(), 1.0}},
                                          {0.5, 0.5}, {3, 3}, 0.0, {rng.normal()}));
  }
  const PosteriorSummary a = summarize(store, IdentStrategy::kOrdering, ClusterFeatures::kAlphaOnly, 0);
  CHECK(std::fabs(a.weights_mean.sum() - 1.0) < 1e-6);
  CHECK(a.beta_lo[0] <= a.beta_mean[0]);
  CHECK(a.beta_mean[0] <= a.beta_hi[0]);
  DrawStore shuffled = store;
  std::mt19937 gen(7);
  std::shuffle(shuffled.records.begin(), shuffled.records.end(), gen);
  const PosteriorSummary b =
      summarize(shuffled, IdentStrategy::kOrdering, ClusterFeatures::kAlphaOnly, 0);
  CHECK(a.kplus_map == b.kplus_map);
  CHECK(a.beta_mean[0] == doctest::Approx(b.beta_mean[0]).epsilon(1e-12));
  CHECK(a.beta_lo[0] == doctest::Approx(b.beta_lo[0]).epsilon(1e-12));
  REQUIRE(a.atoms_mean.size() == b.atoms_mean.size());
  for (std::size_t k = 0; k < a.atoms_mean.size(); ++k)
    CHECK(a.atoms_mean[k].alpha == doctest::Approx(b.atoms_mean[k].alpha).epsilon(1e-12));
}

TEST_CASE("identify_by_ordering: output is sorted in every draw") {
  Rng rng(4);
  DrawStore store;
  for (int d = 0; d < 100; ++d) {
    std::vector<Atom> atoms;
    std::vector<double> w;
    std::vector<int> c;
    for (int k = 0; k < 3; ++k) {
      atoms.push_back({rng.normal(0, 3), 0.5 + rng.uniform()});
      w.push_back(1.0 / 3.0);
      c.push_back(2);
    }
    store.records.push_back(make_record(atoms, w, c));
  }
  const IdentifiedDraws id = identify_by_ordering(store, 3);
  for (const auto& d : id.draws) {
    CHECK(d.atoms[0].alpha <= d.atoms[1].alpha);
    CHECK(d.atoms[1].alpha <= d.atoms[2].alpha);
  }
}

TEST_CASE("aggregate_mc: the less-than-or-equal rule and the true-K fallback") {
  auto rep = [&](int kplus, double alpha0) {
    PosteriorSummary s;
    s.kplus_map = kplus;
    s.k_map = kplus;
    s.kplus_q1 = s.kplus_q3 = kplus;
    s.k_q1 = s.k_q3 = kplus;
    s.atoms_mean.assign(kplus, Atom{alpha0, 1.0});
    s.weights_mean = Eigen::VectorXd::Constant(kplus, 1.0 / kplus);
    s.beta_mean = Eigen::VectorXd::Zero(1);
    s.beta_lo = Eigen::VectorXd::Zero(1);
    s.beta_hi = Eigen::VectorXd::Zero(1);
    s.cumeff_mean = Eigen::VectorXd::Zero(1);
    s.cumeff_lo = Eigen::VectorXd::Zero(1);
    s.cumeff_hi = Eigen::VectorXd::Zero(1);
    return s;
  };

  // most reps at K+=2, one at 3, one at 1: target 2, pool = reps with K+ <= 2,
  // atom averages over the K+=2 reps only
  std::vector<PosteriorSummary> reps = {rep(2, 1.0), rep(2, 3.0), rep(3, 99.0), rep(1, 7.0)};
  const McAggregate agg = aggregate_mc(reps, 3);
  CHECK(agg.kplus_round == 2);
  CHECK(agg.n_reps_atoms == 2);
  CHECK(agg.atoms_mean[0].alpha == doctest::Approx(2.0));

  // K-hat-plus never attained: average over reps at the true K*
  std::vector<PosteriorSummary> odd = {rep(1, 5.0), rep(3, 1.0), rep(3, 2.0), rep(1, 6.0)};
  const McAggregate fallback = aggregate_mc(odd, 3);
  CHECK(fallback.kplus_round == 2);
  CHECK(fallback.n_reps_atoms == 2);
  CHECK(fallback.atoms_mean.size() == 3);
  CHECK(fallback.atoms_mean[0].alpha == doctest::Approx(1.5));
}

TEST_CASE("kmeans: recovers well-separated centers") {
  Rng rng(5);
  Eigen::MatrixXd x(300, 1);
  for (int i = 0; i < 300; ++i)
    x(i, 0) = (i % 3 == 0 ? -10.0 : (i % 3 == 1 ? 0.0 : 10.0)) + 0.1 * rng.normal();
  const KmeansResult km = kmeans(x, 3, 10, rng);
  std::vector<double> centers = {km.centers(0, 0), km.centers(1, 0), km.centers(2, 0)};
  std::sort(centers.begin(), centers.end());
  CHECK(std::fabs(centers[0] + 10.0) < 0.1);
  CHECK(std::fabs(centers[1]) < 0.1);
  CHECK(std::fabs(centers[2] - 10.0) < 0.1);
}
