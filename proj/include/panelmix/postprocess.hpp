#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "panelmix/kmeans.hpp"
#include "panelmix/rng.hpp"
#include "panelmix/sampler.hpp"
#include "panelmix/types.hpp"

namespace panelmix::post {

enum class IdentStrategy { kOrdering, kClustering };
enum class ClusterFeatures { kAlphaOnly, kAlphaLogSigma2 };

// Mode of integer draws; ties broken toward the smaller value.
int map_estimate(const std::vector<int>& draws);

struct IdentifiedDraw {
  std::vector<Atom> atoms;  // kplus_target components, relabeled
  Eigen::VectorXd weights;  // renormalized over the kept components
};

struct IdentifiedDraws {
  int kplus_target = 0;
  std::vector<IdentifiedDraw> draws;
  int n_discarded = 0;       // clustering draws without a component-cluster bijection
  bool unreliable = false;   // more than half of the candidate draws discarded
};

// Keep draws with K+ = kplus_target, restrict to non-empty components, sort
// ascending by theta_alpha (stable in the original index on ties).
IdentifiedDraws identify_by_ordering(const DrawStore& store, int kplus_target);

// Point-process relabeling: pool the filled components of qualifying draws,
// k-means them (k-means++ with restarts), keep draws whose components map
// bijectively onto clusters, order clusters by ascending center alpha.
IdentifiedDraws identify_by_clustering(const DrawStore& store, int kplus_target,
                                       ClusterFeatures features, Rng& rng);

struct PosteriorSummary {
  int n_draws = 0;
  int k_map = 0, kplus_map = 0;
  int k_q1 = 0, k_q3 = 0, kplus_q1 = 0, kplus_q3 = 0;
  Eigen::VectorXd kplus_pmf;  // index k-1 holds P(K+ = k | data)

  std::vector<Atom> atoms_mean;  // identified at kplus_map
  Eigen::VectorXd weights_mean;
  double discard_frac = 0.0;
  bool ident_unreliable = false;

  bool dynamic = false;
  double gamma_mean = 0.0, gamma_lo = 0.0, gamma_hi = 0.0;
  Eigen::VectorXd beta_mean, beta_lo, beta_hi;
  // beta / (1 - gamma), computed draw-wise (static mode: gamma = 0)
  Eigen::VectorXd cumeff_mean, cumeff_lo, cumeff_hi;
};

PosteriorSummary summarize(const DrawStore& store, IdentStrategy strategy, ClusterFeatures features,
                           std::uint64_t ident_seed);

// Monte-Carlo-study aggregation: average the per-replication MAPs and
// quartiles; average atoms only over replications whose cluster count
// matches the rule's target (<= K-hat-plus set when it is attained,
// otherwise the replications at the true K*).
struct McAggregate {
  int n_reps = 0;
  double k_hat = 0.0, kplus_hat = 0.0;
  double k_q1 = 0.0, k_q3 = 0.0, kplus_q1 = 0.0, kplus_q3 = 0.0;
  int kplus_round = 0;       // integer target used by the averaging rule
  int n_reps_atoms = 0;      // replications entering the atom averages
  std::vector<Atom> atoms_mean;
  Eigen::VectorXd weights_mean;
  bool dynamic = false;
  double gamma_mean = 0.0, gamma_lo = 0.0, gamma_hi = 0.0;
  Eigen::VectorXd beta_mean, beta_lo, beta_hi;
  Eigen::VectorXd cumeff_mean, cumeff_lo, cumeff_hi;
};

McAggregate aggregate_mc(const std::vector<PosteriorSummary>& reps, std::optional<int> true_k);

using panelmix::kmeans;
using panelmix::KmeansResult;
using panelmix::silhouette;

}  // namespace panelmix::post
