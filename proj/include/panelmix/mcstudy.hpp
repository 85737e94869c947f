#pragma once

#include <cstdint>
#include <string>

#include "panelmix/config.hpp"
#include "panelmix/postprocess.hpp"

namespace panelmix {

struct RepResult {
  int rep = 0;
  std::uint64_t sim_seed = 0, chain_seed = 0, ident_seed = 0;
  bool failed = false;
  std::string error;
  post::PosteriorSummary summary;
  double w1_truth = std::numeric_limits<double>::quiet_NaN();
};

struct McReport {
  int n_reps = 0;
  int n_failed = 0;
  std::vector<RepResult> reps;
  post::McAggregate aggregate;
  double w1_truth_median = std::numeric_limits<double>::quiet_NaN();
};

// Derived seeding rule: replication r uses streams (3r, 3r+1, 3r+2) of the
// base seed for simulation, chain and identification respectively.
std::uint64_t mc_sim_seed(std::uint64_t base, int rep);
std::uint64_t mc_chain_seed(std::uint64_t base, int rep);
std::uint64_t mc_ident_seed(std::uint64_t base, int rep);

// simulate -> fit -> summarize per replication, aggregated with the
// less-than-or-equal averaging rule; failed replications are recorded and
// skipped. Replications run on cfg.mc.threads workers.
McReport run_mc_study(const RunConfig& cfg, std::uint64_t seed);

// Report writers. All output is deterministic for a fixed (config, seed).
void write_summary_csv(const std::string& path, const post::PosteriorSummary& s);
void write_summary_table(const std::string& path, const post::PosteriorSummary& s);
void write_mc_csv(const std::string& path, const McReport& report);
void write_mc_reps_csv(const std::string& path, const McReport& report);
void write_mc_table(const std::string& path, const McReport& report);

}  // namespace panelmix
